use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use reqwest::{Client, StatusCode};
use retrofit_session::http::BatchView;
use retrofit_session::{serve, AppState, ServiceConfig, Session, SessionStore, Status};
use serde_json::{json, Value};

struct Server {
    base: String,
    client: Client,
    _dir: tempfile::TempDir,
}

async fn start() -> Server {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let defaults = ServiceConfig { evolve_budget: 40, ..ServiceConfig::default() };
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(serve(listener, AppState::new(store, defaults), std::future::pending()));
    Server { base, client: Client::new(), _dir: dir }
}

impl Server {
    async fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        let r = self.client.post(format!("{}{path}", self.base)).json(&body).send().await.unwrap();
        (r.status(), r.json().await.unwrap())
    }

    async fn get(&self, path: &str) -> (StatusCode, Value) {
        let r = self.client.get(format!("{}{path}", self.base)).send().await.unwrap();
        (r.status(), r.json().await.unwrap())
    }

    async fn delete(&self, path: &str) -> (StatusCode, Value) {
        let r = self.client.delete(format!("{}{path}", self.base)).send().await.unwrap();
        (r.status(), r.json().await.unwrap())
    }
}

fn view(v: Value) -> BatchView {
    serde_json::from_value(v).unwrap()
}

#[tokio::test]
async fn full_interactive_round_trip() {
    let s = start().await;
    let (status, body) = s.post("/sessions", json!({"seed": 5})).await;
    assert_eq!(status, StatusCode::CREATED);
    let first = view(body);
    assert_eq!(first.candidates.len(), 15);
    assert_eq!(first.status, Status::AwaitingFeedback);
    let png = STANDARD.decode(&first.candidates[0].image_png_base64).unwrap();
    assert_eq!(&png[1..4], b"PNG");
    let id = first.session_id.clone();

    let (status, state) = s.get(&format!("/sessions/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    let state: Session = serde_json::from_value(state).unwrap();
    assert!(state.history.is_empty());
    assert_eq!(state.batch.len(), 15);

    let picks: Vec<Value> = first.candidates[..3]
        .iter()
        .enumerate()
        .map(|(i, c)| if i == 0 { json!({"uid": c.uid, "px": 5, "py": 120}) } else { json!({"uid": c.uid}) })
        .collect();
    let (status, body) = s.post(&format!("/sessions/{id}/feedback"), json!({"selected": picks})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let second = view(body);
    assert_eq!(second.generation, 1);
    assert_eq!(second.candidates.len(), 15);

    // The old batch is stale now.
    let stale = json!({"selected": [{"uid": first.candidates[0].uid}]});
    let (status, body) = s.post(&format!("/sessions/{id}/feedback"), stale).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "stale_uid");

    let (status, batch) = s.get(&format!("/sessions/{id}/batch")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view(batch).generation, 1);

    let (status, closed) = s.delete(&format!("/sessions/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    let closed: Session = serde_json::from_value(closed).unwrap();
    assert_eq!(closed.status, Status::Closed);
    assert_eq!(closed.batch.len(), 15);
    assert_eq!(Session::replay(closed.config.clone(), &closed.history).unwrap(), closed);

    let again = json!({"selected": [{"uid": second.candidates[0].uid}]});
    let (status, body) = s.post(&format!("/sessions/{id}/feedback"), again).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "session_closed");
    let (status, _) = s.get(&format!("/sessions/{id}/batch")).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn same_seed_same_first_batch() {
    let s = start().await;
    let a = view(s.post("/sessions", json!({"seed": 9, "lambda": 4, "mu": 2})).await.1);
    let b = view(s.post("/sessions", json!({"seed": 9, "lambda": 4, "mu": 2})).await.1);
    assert_ne!(a.session_id, b.session_id);
    let images = |v: &BatchView| v.candidates.iter().map(|c| c.image_png_base64.clone()).collect::<Vec<_>>();
    assert_eq!(images(&a), images(&b));
}

#[tokio::test]
async fn errors_are_json() {
    let s = start().await;
    let (status, body) = s.post("/sessions", json!({"lambda": 4, "mu": 4})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "invalid_config");
    assert!(body["message"].as_str().unwrap().contains("mu"));

    let (status, body) = s.post("/sessions", json!({"lambda": "many"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "invalid_request");

    let (status, body) = s.get("/sessions/doesnotexist").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "not_found");

    let (status, body) = s.get("/nowhere").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "not_found");

    let id = view(s.post("/sessions", json!({"lambda": 4, "mu": 2, "seed": 1})).await.1).session_id;
    let (status, body) = s.post(&format!("/sessions/{id}/feedback"), json!({"selected": []})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "invalid_request");
    let (status, body) = s.post(&format!("/sessions/{id}/seed-choice"), json!({"indices": [0, 1, 2, 3, 4]})).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["code"], "wrong_mode");
}

#[tokio::test]
async fn seed_diversity_over_http() {
    let s = start().await;
    let (status, body) = s.post("/sessions", json!({"mode": "seed_diversity", "lambda": 3, "mu": 1, "seed": 2})).await;
    assert_eq!(status, StatusCode::CREATED);
    let v = view(body);
    assert_eq!(v.screens.len(), 30);
    assert!(v.screens.iter().all(|sc| sc.images_png_base64.len() == 3));
    assert!(v.candidates.is_empty());
    let id = v.session_id;

    let one = view(s.get(&format!("/sessions/{id}/batch?screen=7")).await.1);
    assert_eq!(one.screens.len(), 1);
    assert_eq!(one.screens[0].index, 7);

    let (status, body) = s.post(&format!("/sessions/{id}/seed-choice"), json!({"indices": [1, 1, 2, 3, 4]})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    let (status, body) = s.post(&format!("/sessions/{id}/seed-choice"), json!({"indices": [1, 2, 3]})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    let (status, body) = s.post(&format!("/sessions/{id}/seed-choice"), json!({"indices": [3, 8, 13, 21, 29]})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let v = view(body);
    assert_eq!(v.candidates.len(), 3);
    assert!(v.screens.is_empty());
}

#[tokio::test]
async fn concurrent_sessions_do_not_interfere() {
    let s = start().await;
    let a = view(s.post("/sessions", json!({"seed": 1, "lambda": 5, "mu": 2})).await.1);
    let b = view(s.post("/sessions", json!({"seed": 2, "lambda": 5, "mu": 2})).await.1);
    let before_b = s.get(&format!("/sessions/{}", b.session_id)).await.1;
    let (path_a, path_b) = (format!("/sessions/{}/feedback", a.session_id), format!("/sessions/{}", b.session_id));
    let fa = s.post(&path_a, json!({"selected": [{"uid": a.candidates[0].uid}]}));
    let ga = s.get(&path_b);
    let ((status, _), (_, during_b)) = tokio::join!(fa, ga);
    assert_eq!(status, StatusCode::OK);
    assert_eq!(during_b, before_b);
    assert_eq!(s.get(&format!("/sessions/{}", b.session_id)).await.1, before_b);
}
