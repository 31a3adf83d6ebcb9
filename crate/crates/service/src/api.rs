//! HTTP routes and JSON bodies.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use emblem_core::corpus::{ColumnSchema, CorpusError};
use emblem_core::emblem::{Counts, SessionError};
use emblem_core::labels::write_labels;
use emblem_core::{EmblemParams, Feature, Phase};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

use crate::journal::JournalError;
use crate::store::{CorpusInfo, LiveSession, Store, StoreError};

const MAX_UPLOAD: usize = 512 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    NotFound,
    Conflict,
    BadRequest,
    Exhausted,
    Internal,
}

impl ErrorCode {
    fn status(self) -> StatusCode {
        match self {
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Conflict => StatusCode::CONFLICT,
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::Exhausted => StatusCode::GONE,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let code = match &e {
            StoreError::CorpusNotFound(_) | StoreError::SessionNotFound(_) => ErrorCode::NotFound,
            StoreError::Ingest(_) => ErrorCode::BadRequest,
            StoreError::Session(s) => match s {
                SessionError::UnknownId(_) => ErrorCode::NotFound,
                SessionError::AlreadyLabelled(_) => ErrorCode::Conflict,
                SessionError::InvalidParams(_) | SessionError::EmptyCorpus | SessionError::ZeroCandidates => {
                    ErrorCode::BadRequest
                }
                _ => ErrorCode::Internal,
            },
            StoreError::Journal(JournalError::NothingToUndo) => ErrorCode::BadRequest,
            StoreError::Journal(_) | StoreError::Io(_) | StoreError::Corpus(_) => ErrorCode::Internal,
        };
        ApiError::new(code, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub corpus_id: String,
    #[serde(default)]
    pub params: Option<EmblemParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub params: EmblemParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub commit_id: String,
    pub message: String,
    pub release: u32,
    pub features: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextResponse {
    pub candidates: Vec<Candidate>,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRequest {
    pub commit_id: String,
    pub is_fixing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelResponse {
    pub seq: u64,
    pub phase: Phase,
    pub estimated_recall: Option<f64>,
    pub should_stop: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UndoResponse {
    pub seq: u64,
    pub cancelled: u64,
    pub commit_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusResponse {
    pub session_id: String,
    pub corpus_id: String,
    pub counts: Counts,
    pub phase: Phase,
    pub estimated_recall: Option<f64>,
    pub fraction_read: f64,
    pub should_stop: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportedLabel {
    pub commit_id: String,
    pub label: bool,
}

fn status_of(live: &LiveSession) -> StatusResponse {
    let s = &live.session;
    StatusResponse {
        session_id: live.id().to_string(),
        corpus_id: live.corpus_id().to_string(),
        counts: s.counts(),
        phase: s.phase(),
        estimated_recall: s.estimate().map(|e| e.estimated_recall),
        fraction_read: s.fraction_read(),
        should_stop: s.should_stop(),
    }
}

/// Runs blocking store work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(ApiError::new(ErrorCode::Internal, format!("worker failed: {e}"))))
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/corpora", post(upload_corpus).layer(DefaultBodyLimit::max(MAX_UPLOAD)))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/labels", post(label))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/status", get(status))
        .route("/sessions/{id}/export", get(export))
        .layer(CorsLayer::permissive())
        .with_state(store)
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

/// Accepts `multipart/form-data` with a `csv` file part (any part with a
/// filename also counts) and an optional JSON `schema` part, or a raw CSV body.
async fn upload_corpus(State(store): State<Arc<Store>>, req: Request) -> ApiResult<Json<CorpusInfo>> {
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    let bad = |m: String| ApiError::new(ErrorCode::BadRequest, m);
    let (csv, schema) = if is_multipart {
        let mut multipart = Multipart::from_request(req, &()).await.map_err(|e| bad(e.to_string()))?;
        let mut csv = None;
        let mut schema = ColumnSchema::default();
        while let Some(field) = multipart.next_field().await.map_err(|e| bad(e.to_string()))? {
            let name = field.name().unwrap_or_default().to_string();
            let has_file = field.file_name().is_some();
            let data = field.bytes().await.map_err(|e| bad(e.to_string()))?;
            if name == "schema" {
                schema = serde_json::from_slice(&data).map_err(|e| bad(format!("invalid schema: {e}")))?;
            } else if name == "csv" || (has_file && csv.is_none()) {
                csv = Some(data);
            }
        }
        (csv.ok_or_else(|| bad("multipart upload has no csv part".to_string()))?, schema)
    } else {
        let body = Bytes::from_request(req, &()).await.map_err(|e| bad(e.to_string()))?;
        (body, ColumnSchema::default())
    };
    let info = blocking(move || {
        store.add_corpus(&csv, &schema).map_err(|e| match e {
            StoreError::Ingest(CorpusError::MissingColumn(c)) => bad(format!("missing column: {c}")),
            other => other.into(),
        })
    })
    .await?;
    Ok(Json(info))
}

async fn create_session(
    State(store): State<Arc<Store>>,
    Json(body): Json<CreateSession>,
) -> ApiResult<Json<SessionCreated>> {
    blocking(move || {
        let params = body.params.unwrap_or_default();
        let handle = store.create_session(&body.corpus_id, params)?;
        let live = handle.read().expect("session lock");
        Ok(Json(SessionCreated { session_id: live.id().to_string(), params: live.session.params().clone() }))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct NextQuery {
    n: Option<usize>,
}

async fn next(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    Query(q): Query<NextQuery>,
) -> ApiResult<Json<NextResponse>> {
    blocking(move || {
        let handle = store.session(&id)?;
        let live = handle.read().expect("session lock");
        let cands = live.next(q.n.unwrap_or(1)).map_err(StoreError::from)?;
        if cands.exhausted {
            return Err(ApiError::new(ErrorCode::Exhausted, "every commit has been labelled"));
        }
        let corpus = live.session.corpus();
        let candidates = cands
            .ids
            .iter()
            .map(|cid| {
                let c = corpus.commit(corpus.position(cid).expect("candidate is in corpus"));
                let features = Feature::ALL.iter().map(|f| (f.name().to_string(), c.feature(*f).into())).collect();
                Candidate { commit_id: c.id.clone(), message: c.message.clone(), release: c.release_index, features }
            })
            .collect();
        Ok(Json(NextResponse { candidates, phase: live.session.phase() }))
    })
    .await
}

async fn label(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    Json(body): Json<LabelRequest>,
) -> ApiResult<Json<LabelResponse>> {
    blocking(move || {
        let handle = store.session(&id)?;
        let mut live = handle.write().expect("session lock");
        let out = live.label(&body.commit_id, body.is_fixing)?;
        Ok(Json(LabelResponse {
            seq: out.seq,
            phase: out.phase,
            estimated_recall: out.estimated_recall,
            should_stop: out.should_stop,
        }))
    })
    .await
}

async fn undo(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<Json<UndoResponse>> {
    blocking(move || {
        let handle = store.session(&id)?;
        let mut live = handle.write().expect("session lock");
        let (seq, cancelled) = live.undo()?;
        Ok(Json(UndoResponse { seq, cancelled: cancelled.seq, commit_id: cancelled.commit_id }))
    })
    .await
}

async fn status(State(store): State<Arc<Store>>, Path(id): Path<String>) -> ApiResult<Json<StatusResponse>> {
    blocking(move || {
        let handle = store.session(&id)?;
        let live = handle.read().expect("session lock");
        Ok(Json(status_of(&live)))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    let format = q.format.unwrap_or_else(|| "json".to_string());
    if format != "json" && format != "csv" {
        return Err(ApiError::new(ErrorCode::BadRequest, format!("unknown export format {format:?}")));
    }
    blocking(move || {
        let handle = store.session(&id)?;
        let live = handle.read().expect("session lock");
        let labels = live.labels();
        if format == "csv" {
            let mut buf = Vec::new();
            write_labels(&mut buf, labels.iter().map(|a| (&a.commit_id, a.label)), None)
                .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?;
            Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], buf).into_response())
        } else {
            let rows: Vec<ExportedLabel> =
                labels.iter().map(|a| ExportedLabel { commit_id: a.commit_id.clone(), label: a.label }).collect();
            Ok(Json(rows).into_response())
        }
    })
    .await
}
