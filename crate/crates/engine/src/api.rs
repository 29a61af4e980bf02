//! HTTP/JSON routes.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/models` | ingested models |
//! | GET, POST | `/api/concepts` | list / upload a concept file |
//! | GET, POST | `/api/explanations` | list / compose |
//! | GET | `/api/explanations/{id}` | one handle |
//! | GET | `/api/explanations/{id}/single?model&layer` | single-model payload |
//! | GET | `/api/explanations/{id}/compare?sourceModel&sourceLayer&targetModel&targetLayer` | comparison payload |
//! | GET | `/api/explanations/{id}/glyphs?model` | per-layer glyph scores |
//! | GET | `/api/models/{m}/words/{w}/details` | contexts and predictions |
//! | POST | `/api/pixel` | pixel matrix |
//! | GET, DELETE | `/api/jobs/{id}` | poll / cancel a background job |
//!
//! t-SNE payloads and clustered pixel matrices answer `202 Accepted` with
//! a job description until the job is done; poll `/api/jobs/{id}`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Deserialize;

use crate::engine::{ComposeRequest, Computed, Engine, PixelRequest};
use crate::error::EngineError;

type AppState = Arc<Engine>;

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/api/models", get(list_models))
        .route("/api/concepts", get(list_concepts).post(add_concept))
        .route("/api/explanations", get(list_explanations).post(compose))
        .route("/api/explanations/{id}", get(get_explanation))
        .route("/api/explanations/{id}/single", get(single))
        .route("/api/explanations/{id}/compare", get(compare))
        .route("/api/explanations/{id}/glyphs", get(glyphs))
        .route("/api/models/{model}/words/{word}/details", get(details))
        .route("/api/pixel", axum::routing::post(pixel))
        .route("/api/jobs/{id}", get(job).delete(cancel_job))
        .with_state(engine)
}

impl IntoResponse for EngineError {
    fn into_response(self) -> Response {
        let status = match &self {
            EngineError::UnknownModel(_) | EngineError::UnknownExplanation(_) | EngineError::UnknownJob(_) => StatusCode::NOT_FOUND,
            EngineError::BadRequest(_) => StatusCode::BAD_REQUEST,
            EngineError::Io { .. } | EngineError::Core(conceptlens::Error::Io { .. }) => StatusCode::INTERNAL_SERVER_ERROR,
            EngineError::Core(conceptlens::Error::Cancelled) => StatusCode::CONFLICT,
            EngineError::Core(_) => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let body = serde_json::json!({
            "error": self.category(),
            "reason": self.reason(),
            "message": self.to_string(),
        });
        (status, Json(body)).into_response()
    }
}

fn json_bytes(status: StatusCode, bytes: impl Into<Bytes>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], bytes.into()).into_response()
}

fn computed(result: Computed) -> Response {
    match result {
        Computed::Ready(bytes) => json_bytes(StatusCode::OK, bytes.as_ref().clone()),
        Computed::Pending(job) => {
            let body = serde_json::json!({
                "id": job.id,
                "kind": job.kind,
                "status": job.status,
                "poll": format!("/api/jobs/{}", job.id),
            });
            (StatusCode::ACCEPTED, Json(body)).into_response()
        }
    }
}

/// Runs blocking engine work off the async executor.
async fn blocking<T: Send + 'static>(
    work: impl FnOnce() -> Result<T, EngineError> + Send + 'static,
) -> Result<T, EngineError> {
    tokio::task::spawn_blocking(work)
        .await
        .unwrap_or_else(|e| Err(EngineError::BadRequest(format!("worker failed: {e}"))))
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, EngineError> {
    serde_json::from_slice(body).map_err(|e| EngineError::BadRequest(format!("invalid JSON body: {e}")))
}

async fn list_models(State(engine): State<AppState>) -> Response {
    Json(engine.models()).into_response()
}

async fn list_concepts(State(engine): State<AppState>) -> Response {
    Json(engine.concepts()).into_response()
}

async fn add_concept(State(engine): State<AppState>, body: Bytes) -> Result<Response, EngineError> {
    let text = std::str::from_utf8(&body).map_err(|_| EngineError::BadRequest("concept file must be UTF-8".into()))?;
    let concept = engine.add_concept(text)?;
    Ok((StatusCode::CREATED, Json(concept)).into_response())
}

async fn list_explanations(State(engine): State<AppState>) -> Response {
    Json(engine.explanations()).into_response()
}

async fn compose(State(engine): State<AppState>, body: Bytes) -> Result<Response, EngineError> {
    let request: ComposeRequest = parse_json(&body)?;
    let (handle, created) = engine.compose(request)?;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(handle)).into_response())
}

async fn get_explanation(State(engine): State<AppState>, Path(id): Path<String>) -> Result<Response, EngineError> {
    Ok(Json(engine.explanation(&id)?).into_response())
}

#[derive(Debug, Deserialize)]
struct SingleQuery {
    model: String,
    layer: Option<u32>,
}

async fn single(
    State(engine): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SingleQuery>,
) -> Result<Response, EngineError> {
    let out = blocking(move || engine.single(&id, &q.model, q.layer, true)).await?;
    Ok(computed(out))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct CompareQuery {
    source_model: String,
    source_layer: u32,
    target_model: String,
    target_layer: u32,
}

async fn compare(
    State(engine): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<CompareQuery>,
) -> Result<Response, EngineError> {
    let out = blocking(move || {
        engine.compare(&id, (&q.source_model, q.source_layer), (&q.target_model, q.target_layer), true)
    })
    .await?;
    Ok(computed(out))
}

#[derive(Debug, Deserialize)]
struct GlyphQuery {
    model: String,
}

async fn glyphs(
    State(engine): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<GlyphQuery>,
) -> Result<Response, EngineError> {
    let bytes = blocking(move || engine.glyphs(&id, &q.model)).await?;
    Ok(json_bytes(StatusCode::OK, bytes.as_ref().clone()))
}

async fn details(
    State(engine): State<AppState>,
    Path((model, word)): Path<(String, String)>,
) -> Result<Response, EngineError> {
    Ok(json_bytes(StatusCode::OK, engine.word_details(&model, &word)?))
}

async fn pixel(State(engine): State<AppState>, body: Bytes) -> Result<Response, EngineError> {
    let request: PixelRequest = parse_json(&body)?;
    let out = blocking(move || engine.pixel(request, true)).await?;
    Ok(computed(out))
}

async fn job(State(engine): State<AppState>, Path(id): Path<String>) -> Result<Response, EngineError> {
    Ok(json_bytes(StatusCode::OK, engine.job(&id)?))
}

async fn cancel_job(State(engine): State<AppState>, Path(id): Path<String>) -> Result<Response, EngineError> {
    engine.cancel_job(&id)?;
    Ok(StatusCode::NO_CONTENT.into_response())
}
