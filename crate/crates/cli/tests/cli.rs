use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use retrofit::latent::{ClickPoint, LatentTensor};
use serde_json::{json, Value};

fn retrofit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retrofit")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn run_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = retrofit(&[
            "run", "--task", "two-constant", "--optimizer", "NGOptLite", "--budget", "2", "--runs", "8", "--seed", "1",
            "--out", p(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let jsonl = std::fs::read_to_string(a.join("runs.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 8);
    for line in jsonl.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["budget"], 2);
    }
    let summary = std::fs::read(a.join("summary.json")).unwrap();
    assert_eq!(summary, std::fs::read(b.join("summary.json")).unwrap());
    let v: Value = serde_json::from_slice(&summary).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["total_evaluations"], 16);

    let csv = std::fs::read_to_string(a.join("runs.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "schema_version,run,optimizer,algorithm,budget,seed,val_loss,test_loss,error");
    assert_eq!(lines.count(), 8);
}

#[test]
fn usage_errors_exit_with_two() {
    let o = retrofit(&["run", "--task", "two-constant", "--optimizer", "Nope", "--budget", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = retrofit(&["run", "--task", "nope", "--optimizer", "NGOptLite", "--budget", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = retrofit(&["risk", "--k", "1", "--lambda", "2", "--N", "2", "--delta", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = retrofit(&["run", "--task", "policy", "--scale-suffix", "7", "--optimizer", "NGOptLite", "--budget", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn risk_values() {
    let o = retrofit(&["risk", "--k", "1", "--lambda", "16", "--N", "16", "--delta", "0.01"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 0.16);
    let o = retrofit(&["risk", "--k", "3", "--lambda", "1", "--N", "50", "--delta", "0.01"]);
    assert_eq!(stdout(&o).trim().parse::<f64>().unwrap(), 0.03);
}

#[test]
fn latent_tools_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = |n: &str| dir.path().join(n);
    for (seed, name) in [("1", "a.json"), ("2", "b.json")] {
        let o = retrofit(&["latent", "sample", "--seed", seed, "--shape", "8x8x4", "--out", p(&path(name))]);
        assert!(o.status.success());
    }
    let o = retrofit(&[
        "latent", "crossover", "--z1", p(&path("a.json")), "--z2", p(&path("b.json")), "--p1", "10,10", "--p2", "100,100",
        "--out", p(&path("c.json")),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let read = |n: &str| -> LatentTensor { serde_json::from_slice(&std::fs::read(path(n)).unwrap()).unwrap() };
    let (a, b, c) = (read("a.json"), read("b.json"), read("c.json"));
    let expected = retrofit::latent::voronoi_crossover(&a, &b, ClickPoint::new(10, 10), ClickPoint::new(100, 100)).unwrap();
    assert_eq!(c, expected);
    for y in 0..8 {
        for x in 0..8 {
            assert!(c.cell(y, x) == a.cell(y, x) || c.cell(y, x) == b.cell(y, x));
        }
    }

    let o = retrofit(&["latent", "render", "--z", p(&path("c.json")), "--out", p(&path("c.png"))]);
    assert!(o.status.success());
    assert_eq!(&std::fs::read(path("c.png")).unwrap()[1..4], b"PNG");

    // Planted rule: bad when the first coordinate is positive.
    let samples: Vec<Value> = (0..40u64)
        .map(|s| {
            let z = LatentTensor::standard_normal(a.shape(), &mut retrofit::seed::rng(s, &[])).unwrap();
            let label = if z.values()[0] > 0.0 { "bad" } else { "good" };
            json!({"values": z.values(), "label": label})
        })
        .collect();
    std::fs::write(path("labeled.json"), serde_json::to_vec(&samples).unwrap()).unwrap();
    let o = retrofit(&["latent", "fit", "--data", p(&path("labeled.json")), "--out", p(&path("tree.json"))]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("training accuracy 1.0000"), "{}", stdout(&o));

    let file: Value = serde_json::from_slice(&std::fs::read(path("tree.json")).unwrap()).unwrap();
    let tree: retrofit::latent::SurrogateModel = serde_json::from_value(file["model"].clone()).unwrap();
    let (feature, threshold) = tree.root_split().unwrap();
    let mut bad = a.values().to_vec();
    bad[feature] = threshold + 0.005;
    let bad = LatentTensor::new(a.shape(), bad).unwrap();
    std::fs::write(path("bad.json"), serde_json::to_vec(&bad).unwrap()).unwrap();
    let o = retrofit(&[
        "latent", "evolve", "--model", p(&path("tree.json")), "--z0", p(&path("bad.json")), "--epsilon", "0.01",
        "--budget", "10000", "--out", p(&path("evolved.json")),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!(report["loss"].as_f64().unwrap() < 1e-5, "{report}");
    assert!(report["distance"].as_f64().unwrap() > 0.0);

    let o = retrofit(&["latent", "render", "--z", p(&path("missing.json")), "--out", p(&path("x.png"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn generalize_emits_csv() {
    let o = retrofit(&["generalize", "--task", "two-constant", "--configs", "1x4,2x2", "--replicas", "3", "--seed", "2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().next().unwrap(), "k,b,replica,val_loss,test_loss");
    assert_eq!(out.lines().count(), 7);
    let o = retrofit(&["generalize", "--task", "two-constant", "--configs", "1x4,2x3", "--replicas", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

fn http(addr: &str, method: &str, path: &str, body: &str) -> (u16, String) {
    let mut s = TcpStream::connect(addr).unwrap();
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut response = String::new();
    s.read_to_string(&mut response).unwrap();
    let code = response.split_whitespace().nth(1).unwrap().parse().unwrap();
    (code, response)
}

#[test]
fn serve_on_ephemeral_port() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_retrofit"))
        .args(["serve", "--port", "0", "--evolve-budget", "20"])
        .env("RETROFIT_DATA_DIR", dir.path())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").unwrap().to_string();
    assert_ne!(addr.rsplit(':').next().unwrap(), "0");

    let (code, _) = http(&addr, "GET", "/sessions/unknown", "");
    assert_eq!(code, 404);
    let (code, body) = http(&addr, "POST", "/sessions", r#"{"seed": 3, "lambda": 4, "mu": 2}"#);
    child.kill().unwrap();
    child.wait().unwrap();
    assert_eq!(code, 201, "{body}");
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1);
}
