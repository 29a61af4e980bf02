#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use conceptlens::{generate_dump, SynthParams};
use conceptlens_engine::{api, Engine};
use http_body_util::BodyExt;
use tower::ServiceExt;

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub engine: Arc<Engine>,
    pub router: Router,
}

/// Writes a synthetic dump under `root/dumps/<model_id>` and returns its path.
pub fn write_dump(root: &Path, params: &SynthParams) -> std::path::PathBuf {
    let out = root.join("dumps").join(&params.model_id);
    generate_dump(params).unwrap().write_to(&out).unwrap();
    out
}

/// Engine over a fresh data directory with the given models ingested and
/// the synthetic concept registered.
pub fn fixture(models: &[SynthParams]) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let engine = Arc::new(Engine::open(dir.path().join("data")).unwrap());
    for params in models {
        let dump = write_dump(dir.path(), params);
        engine.ingest(&dump).unwrap();
    }
    if let Some(first) = models.first() {
        let concept = generate_dump(first).unwrap().concept;
        engine.add_concept(&concept.to_json()).unwrap();
    }
    let router = api::router(Arc::clone(&engine));
    Fixture { dir, engine, router }
}

pub fn small(model_id: &str, seed: u64) -> SynthParams {
    SynthParams { model_id: model_id.into(), d: 16, words_per_pole: 12, seed, ..SynthParams::default() }
}

pub async fn send(router: &Router, method: Method, uri: &str, body: Option<serde_json::Value>) -> (StatusCode, Vec<u8>) {
    let mut builder = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            builder = builder.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let response = router.clone().oneshot(builder.body(body).unwrap()).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub async fn get_json(router: &Router, uri: &str) -> (StatusCode, serde_json::Value) {
    let (status, bytes) = send(router, Method::GET, uri, None).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(serde_json::Value::Null))
}

pub async fn post_json(router: &Router, uri: &str, body: serde_json::Value) -> (StatusCode, serde_json::Value) {
    let (status, bytes) = send(router, Method::POST, uri, Some(body)).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(serde_json::Value::Null))
}

/// Polls a job until it leaves the running state.
pub async fn wait_for_job(router: &Router, poll: &str) -> serde_json::Value {
    for _ in 0..600 {
        let (status, body) = get_json(router, poll).await;
        assert_eq!(status, StatusCode::OK);
        if body["status"] != "running" {
            return body;
        }
        tokio::time::sleep(std::time::Duration::from_millis(50)).await;
    }
    panic!("job {poll} did not finish");
}
