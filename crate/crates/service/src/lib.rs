//! Read-only HTTP API over a loaded [`Engine`].
//!
//! | method | path | body |
//! |---|---|---|
//! | GET | `/api/domains` | list of domain summaries |
//! | GET | `/api/domains/{id}/tree` | concept tree |
//! | POST | `/api/search` | `{results: [...]}` |
//! | GET | `/api/segments/{lesson_id}/{segment_id}?explain=a,b` | segment detail |
//!
//! Every error is a JSON envelope `{code, message, detail}`.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ontoseg::engine::{DomainSummary, SegmentDetail};
use ontoseg::ontology::ConceptTree;
use ontoseg::{Engine, Error, SearchRequest, SearchResponse, SegmentRef, Sources};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub sources: Sources,
    /// Directory holding the built web UI, served at `/`.
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Load(#[from] Error),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server error: {0}")]
    Serve(std::io::Error),
}

/// The error envelope returned by every endpoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

struct Failure(StatusCode, ApiError);

impl Failure {
    fn new(status: StatusCode, code: &str, message: impl Into<String>, detail: Option<String>) -> Self {
        Failure(
            status,
            ApiError {
                code: code.into(),
                message: message.into(),
                detail,
            },
        )
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let (status, code) = match e.root() {
            Error::UnknownDomain(_) => (StatusCode::NOT_FOUND, "unknown_domain"),
            Error::UnknownSegment { .. } => (StatusCode::NOT_FOUND, "unknown_segment"),
            Error::UnknownConcept(_) => (StatusCode::BAD_REQUEST, "unknown_concept"),
            Error::EmptyQuery => (StatusCode::BAD_REQUEST, "empty_query"),
            Error::InvalidQuery(_) => (StatusCode::BAD_REQUEST, "invalid_query"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Failure::new(status, code, message, None)
    }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, Failure>;

async fn domains(State(engine): State<Arc<Engine>>) -> Json<Vec<DomainSummary>> {
    Json(engine.domains())
}

async fn tree(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> ApiResult<ConceptTree> {
    Ok(Json(engine.tree(&id)?))
}

async fn search(State(engine): State<Arc<Engine>>, body: Bytes) -> ApiResult<SearchResponse> {
    let req: SearchRequest = serde_json::from_slice(&body).map_err(|e| {
        Failure::new(
            StatusCode::BAD_REQUEST,
            "malformed_body",
            "request body is not a valid search request",
            Some(e.to_string()),
        )
    })?;
    Ok(Json(engine.search(&req)?))
}

#[derive(Deserialize)]
struct DetailParams {
    explain: Option<String>,
}

async fn segment(
    State(engine): State<Arc<Engine>>,
    Path((lesson_id, segment_id)): Path<(String, String)>,
    Query(params): Query<DetailParams>,
) -> ApiResult<SegmentDetail> {
    let concepts: Option<Vec<String>> = params.explain.map(|list| {
        list.split(',')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .map(String::from)
            .collect()
    });
    let sref = SegmentRef::new(lesson_id, segment_id);
    Ok(Json(engine.segment_detail(&sref, concepts.as_deref())?))
}

async fn placeholder() -> Html<&'static str> {
    Html(
        "<!doctype html><html><head><meta charset=\"utf-8\"><title>ontoseg</title></head>\
         <body><p>The web UI is not installed. The JSON API is under <code>/api</code>.</p></body></html>",
    )
}

async fn not_found() -> Failure {
    Failure::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint", None)
}

pub fn router(engine: Arc<Engine>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/domains", get(domains))
        .route("/api/domains/{id}/tree", get(tree))
        .route("/api/search", post(search))
        .route("/api/segments/{lesson_id}/{segment_id}", get(segment))
        .route("/api/{*rest}", get(not_found).post(not_found))
        .with_state(engine);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(placeholder)).fallback(not_found),
    }
}

/// Loads the corpus and serves until interrupted.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let engine = Engine::load(&config.sources)?;
    for w in engine.warnings() {
        log::warn!("{w}");
    }
    log::info!(
        "loaded {} domain(s), {} segment(s)",
        engine.domains().len(),
        engine.corpus().segment_count()
    );
    let app = router(Arc::new(engine), config.static_dir);
    let listener = tokio::net::TcpListener::bind(config.bind)
        .await
        .map_err(|source| ServiceError::Bind {
            addr: config.bind,
            source,
        })?;
    log::info!("listening on http://{}", config.bind);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServiceError::Serve)
}
