//! HTTP/JSON routes.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | POST | `/sessions` | [`CreateRequest`] | 201 [`BatchView`] |
//! | GET | `/sessions/{id}` | | full [`Session`] snapshot |
//! | GET | `/sessions/{id}/batch[?screen=i]` | | [`BatchView`] with base64 PNGs |
//! | POST | `/sessions/{id}/feedback` | `{"selected":[{"uid":1,"px":3,"py":9}]}` | [`BatchView`] |
//! | POST | `/sessions/{id}/seed-choice` | `{"indices":[..5]}` | [`BatchView`] |
//! | DELETE | `/sessions/{id}` | | [`Session`] (closed) |
//!
//! Errors are `{"code": ..., "message": ...}`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use retrofit::latent::{encode_png, toy_generate, LatentShape, LatentTensor};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Mode, Selection, Session, SessionConfig, SessionError, SessionStore, Status};

/// Defaults applied to fields a create request leaves out.
#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub lambda: usize,
    pub mu: usize,
    pub shape: LatentShape,
    pub evolve_budget: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            lambda: crate::session::DEFAULT_LAMBDA,
            mu: crate::session::DEFAULT_MU,
            shape: LatentShape::default(),
            evolve_budget: crate::session::DEFAULT_EVOLVE_BUDGET,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    pub defaults: Arc<ServiceConfig>,
}

impl AppState {
    pub fn new(store: SessionStore, defaults: ServiceConfig) -> Self {
        Self { store: Arc::new(store), defaults: Arc::new(defaults) }
    }
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub mode: Option<Mode>,
    pub lambda: Option<usize>,
    pub mu: Option<usize>,
    pub shape: Option<LatentShape>,
    pub seed: Option<u64>,
    pub evolve_budget: Option<usize>,
    pub epsilon: Option<f64>,
    pub cumulative_surrogate: Option<bool>,
}

#[derive(Debug, Deserialize, Serialize)]
pub struct FeedbackRequest {
    pub selected: Vec<Selection>,
}

#[derive(Debug, Deserialize, Serialize)]
pub struct SeedChoiceRequest {
    pub indices: Vec<usize>,
}

#[derive(Debug, Deserialize, Serialize)]
pub struct CandidateView {
    pub uid: u64,
    pub image_png_base64: String,
}

#[derive(Debug, Deserialize, Serialize)]
pub struct ScreenView {
    pub index: usize,
    pub seed: u64,
    pub images_png_base64: Vec<String>,
}

#[derive(Debug, Deserialize, Serialize)]
pub struct BatchView {
    pub session_id: String,
    pub mode: Mode,
    pub status: Status,
    pub generation: usize,
    pub lambda: usize,
    pub mu: usize,
    pub candidates: Vec<CandidateView>,
    pub screens: Vec<ScreenView>,
}

#[derive(Debug, Default, Deserialize)]
struct BatchQuery {
    screen: Option<usize>,
}

struct ApiError(SessionError);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        Self(e)
    }
}

fn status_of(e: &SessionError) -> StatusCode {
    match e {
        SessionError::NotFound(_) => StatusCode::NOT_FOUND,
        SessionError::InvalidConfig(_) | SessionError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
        SessionError::StaleUid(_) | SessionError::Closed | SessionError::WrongMode { .. } => StatusCode::CONFLICT,
        SessionError::Storage(_) | SessionError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if status_of(&self.0).is_server_error() {
            log::error!("{}", self.0);
        }
        (status_of(&self.0), Json(self.0.body())).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, SessionError> {
    serde_json::from_slice(body).map_err(|e| SessionError::InvalidRequest(format!("malformed request body: {e}")))
}

/// Runs store work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, SessionError> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(SessionError::Internal(e.to_string())))?
        .map_err(ApiError)
}

fn png_base64(latent: &LatentTensor) -> String {
    STANDARD.encode(encode_png(&toy_generate(latent)))
}

pub fn batch_view(session: &Session, screen: Option<usize>) -> Result<BatchView, SessionError> {
    let candidates = session
        .batch
        .iter()
        .map(|b| CandidateView { uid: b.uid, image_png_base64: png_base64(&b.latent) })
        .collect();
    let mut screens = Vec::new();
    if session.mode == Mode::SeedDiversity {
        let indices: Vec<usize> = match screen {
            Some(i) => vec![i],
            None => (0..session.screen_seeds.len()).collect(),
        };
        for index in indices {
            let latents = session.screen(index)?;
            screens.push(ScreenView {
                index,
                seed: session.screen_seeds[index],
                images_png_base64: latents.iter().map(png_base64).collect(),
            });
        }
    }
    Ok(BatchView {
        session_id: session.id().to_string(),
        mode: session.mode,
        status: session.status,
        generation: session.generation,
        lambda: session.config.lambda,
        mu: session.config.mu,
        candidates,
        screens,
    })
}

async fn create(State(state): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<BatchView>)> {
    let req: CreateRequest = if body.is_empty() { CreateRequest::default() } else { parse(&body)? };
    let d = &state.defaults;
    let mut config = SessionConfig::new(
        uuid::Uuid::new_v4().simple().to_string(),
        req.mode.unwrap_or(Mode::Interactive),
        req.seed.unwrap_or_else(rand::random),
    );
    config.lambda = req.lambda.unwrap_or(d.lambda);
    config.mu = req.mu.unwrap_or(d.mu);
    config.shape = req.shape.unwrap_or(d.shape);
    config.evolve_budget = req.evolve_budget.unwrap_or(d.evolve_budget);
    config.epsilon = req.epsilon.unwrap_or(config.epsilon);
    config.cumulative_surrogate = req.cumulative_surrogate.unwrap_or(false);
    let store = state.store.clone();
    let view = blocking(move || {
        let session = store.create(config)?;
        log::info!("created session {} ({:?})", session.id(), session.mode);
        batch_view(&session, None)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_state(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Session>> {
    let store = state.store.clone();
    Ok(Json(blocking(move || store.get(&id)).await?))
}

async fn get_batch(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<BatchQuery>,
) -> ApiResult<Json<BatchView>> {
    let store = state.store.clone();
    Ok(Json(blocking(move || batch_view(&store.get(&id)?, q.screen)).await?))
}

async fn feedback(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<BatchView>> {
    let req: FeedbackRequest = parse(&body)?;
    let store = state.store.clone();
    let view = blocking(move || {
        let (_, session) = store.update(&id, |s| s.submit_feedback(&req.selected))?;
        batch_view(&session, None)
    })
    .await?;
    Ok(Json(view))
}

async fn seed_choice(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<BatchView>> {
    let req: SeedChoiceRequest = parse(&body)?;
    let store = state.store.clone();
    let view = blocking(move || {
        let (_, session) = store.update(&id, |s| s.select_screens(&req.indices))?;
        batch_view(&session, None)
    })
    .await?;
    Ok(Json(view))
}

async fn close(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Session>> {
    let store = state.store.clone();
    let (_, session) = blocking(move || {
        store.update(&id, |s| {
            s.close();
            Ok(())
        })
    })
    .await?;
    Ok(Json(session))
}

async fn fallback() -> ApiError {
    ApiError(SessionError::NotFound("no such route".into()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(get_state).delete(close))
        .route("/sessions/{id}/batch", get(get_batch))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/sessions/{id}/seed-choice", post(seed_choice))
        .fallback(fallback)
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}
