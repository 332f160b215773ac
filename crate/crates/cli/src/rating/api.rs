//! HTTP routes of the rating service.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde_json::json;

use super::store::{RatingError, Store};
use super::SCHEMA;

impl IntoResponse for RatingError {
    fn into_response(self) -> Response {
        let (status, kind) = match &self {
            RatingError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            RatingError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            RatingError::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "validation"),
            RatingError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            RatingError::Corrupt(_) | RatingError::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        (status, Json(json!({"schema": SCHEMA, "error": kind, "message": self.to_string()}))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, RatingError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, RatingError> {
    serde_json::from_slice(body).map_err(|e| RatingError::BadRequest(format!("invalid JSON body: {e}")))
}

async fn blocking<T, F>(f: F) -> Result<T, RatingError>
where
    F: FnOnce() -> Result<T, RatingError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| RatingError::Io(std::io::Error::other(e.to_string())))?
}

async fn create_session(State(store): State<Arc<Store>>, body: Bytes) -> Result<(StatusCode, Json<super::store::SessionCreated>), RatingError> {
    let req = parse(&body)?;
    let created = blocking(move || store.create_session(&req)).await?;
    tracing::info!(session = %created.session_id, samples = created.n_samples, "session created");
    Ok((StatusCode::CREATED, Json(created)))
}

async fn next_sample(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<super::store::NextResponse> {
    Ok(Json(store.next_sample(&id)?))
}

async fn submit_rating(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<super::store::SubmitAck> {
    let req = parse(&body)?;
    Ok(Json(blocking(move || store.submit_rating(&id, &req)).await?))
}

async fn results(
    State(store): State<Arc<Store>>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<super::session::AggregateResult> {
    let ids: Vec<String> = match q.get("sessions") {
        Some(list) => list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect(),
        None => store.snapshot().sessions.keys().cloned().collect(),
    };
    Ok(Json(store.aggregate(&ids)?))
}

async fn image(State(store): State<Arc<Store>>, Path(hash): Path<String>) -> Result<Response, RatingError> {
    let path = store
        .image_path(&hash)
        .ok_or_else(|| RatingError::NotFound(format!("image {hash}")))?;
    let bytes = std::fs::read(path)?;
    Ok((
        [(header::CONTENT_TYPE, "image/png"), (header::CACHE_CONTROL, "public, max-age=31536000, immutable")],
        bytes,
    )
        .into_response())
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/next", get(next_sample))
        .route("/sessions/{id}/ratings", post(submit_rating))
        .route("/results", get(results))
        .route("/images/{hash}", get(image))
        .with_state(store)
}

/// Opens the store under `data_dir` and serves until the process ends.
pub async fn serve(addr: SocketAddr, data_dir: PathBuf) -> std::io::Result<()> {
    let store = Store::open(&data_dir).map_err(|e| std::io::Error::other(e.to_string()))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, data_dir = %data_dir.display(), "rating service listening");
    axum::serve(listener, router(Arc::new(store))).await
}
