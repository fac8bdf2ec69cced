//! Annotation service endpoints.
//!
//! | method | path                      | body / reply                     |
//! |--------|---------------------------|----------------------------------|
//! | POST   | `/session`                | create from two run records      |
//! | GET    | `/session/{id}/next`      | `?assessor=…` → pair or done     |
//! | POST   | `/session/{id}/judgment`  | judgment → acknowledgment        |
//! | GET    | `/session/{id}/summary`   | preference summary               |

use asqa_core::annotation::{create_session, session_id, Ack, AnnotationError, SessionRegistry};
use asqa_core::dataset::{load_dataset, Split};
use asqa_core::harness::RunRecord;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },

    #[error("server failed: {0}")]
    Server(std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateSessionRequest {
    pub run_a: PathBuf,
    pub run_b: PathBuf,
    /// empty: every sample of `run_a`
    #[serde(default)]
    pub sample_ids: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    /// where the questions come from; defaults to `run_a`'s dataset
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateSessionResponse {
    pub session_id: String,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Deserialize)]
struct NextQuery {
    assessor: Option<String>,
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

impl From<AnnotationError> for ApiError {
    fn from(e: AnnotationError) -> Self {
        let status = match e {
            AnnotationError::UnknownSession(_) | AnnotationError::UnknownPair(_) => StatusCode::NOT_FOUND,
            AnnotationError::Duplicate { .. } | AnnotationError::NoJudgments => StatusCode::CONFLICT,
            AnnotationError::Io(_) | AnnotationError::Format(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError(status, e.to_string())
    }
}

type AppState = Arc<SessionRegistry>;

pub fn router(registry: Arc<SessionRegistry>) -> Router {
    Router::new()
        .route("/session", post(create))
        .route("/session/{id}/next", get(next))
        .route("/session/{id}/judgment", post(judgment))
        .route("/session/{id}/summary", get(summary))
        .with_state(registry)
}

fn create_blocking(
    registry: &SessionRegistry,
    req: CreateSessionRequest,
) -> Result<CreateSessionResponse, ApiError> {
    let bad = |m: String| ApiError(StatusCode::UNPROCESSABLE_ENTITY, m);
    let load =
        |p: &PathBuf| RunRecord::<f64>::load(p).map_err(|e| bad(format!("run record {}: {e}", p.display())));
    let (run_a, run_b) = (load(&req.run_a)?, load(&req.run_b)?);
    let dataset_path = req
        .dataset
        .clone()
        .unwrap_or_else(|| run_a.config.dataset.clone());
    let split = req.split.unwrap_or(run_a.config.split);
    let dataset = load_dataset(&dataset_path, split)
        .map_err(|e| bad(format!("dataset {}: {e}", dataset_path.display())))?;
    let id = session_id(&run_a.config_hash, &run_b.config_hash, &req.sample_ids, req.seed);
    let session = create_session(id, &run_a, &run_b, &dataset, &req.sample_ids, req.seed)?;
    let session = registry.insert(session)?;
    Ok(CreateSessionResponse {
        session_id: session.id.clone(),
        pairs: session.pairs.len(),
    })
}

async fn create(
    State(registry): State<AppState>,
    body: Result<Json<CreateSessionRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<CreateSessionResponse>), ApiError> {
    let Json(req) = body.map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.body_text()))?;
    let resp = tokio::task::spawn_blocking(move || create_blocking(&registry, req))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok((StatusCode::CREATED, Json(resp)))
}

async fn next(
    State(registry): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<NextQuery>,
) -> Result<Response, ApiError> {
    let assessor = q
        .assessor
        .filter(|a| !a.trim().is_empty())
        .ok_or_else(|| ApiError(StatusCode::BAD_REQUEST, "missing assessor".into()))?;
    let session = registry.get(&id)?;
    Ok(Json(session.next_pair(&assessor)).into_response())
}

async fn judgment(
    State(registry): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<asqa_core::annotation::Judgment>, JsonRejection>,
) -> Result<Response, ApiError> {
    let session = registry.get(&id)?;
    let Json(j) = body.map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.body_text()))?;
    let pair_id = j.pair_id;
    let outcome = tokio::task::spawn_blocking(move || session.submit_judgment(j))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    match outcome {
        Ok(ack) => Ok(Json(ack).into_response()),
        Err(e @ AnnotationError::Duplicate { .. }) => {
            let session = registry.get(&id)?;
            let ack = Ack {
                accepted: false,
                pair_id,
                judgments: session.store().len(),
                reason: Some(format!("duplicate: {}", e)),
            };
            Ok((StatusCode::CONFLICT, Json(ack)).into_response())
        }
        Err(e) => Err(e.into()),
    }
}

async fn summary(State(registry): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let session = registry.get(&id)?;
    Ok(Json(session.summarize::<f64>()?).into_response())
}

/// Bind `addr` and serve until the process ends.
pub async fn serve(addr: SocketAddr, registry: Arc<SessionRegistry>) -> Result<(), ServeError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })?;
    log::info!(
        "annotation service listening on {}",
        listener.local_addr().unwrap_or(addr)
    );
    axum::serve(listener, router(registry))
        .await
        .map_err(ServeError::Server)
}
