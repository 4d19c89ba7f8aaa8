//! Local JSON-over-HTTP service over the analysis engine.
//!
//! Every model gets a session holding its draft prioritization. Priorities
//! accumulate in the draft, and only `POST /models/{id}/analyze` creates a
//! recorded version in the [`Store`]. Sessions live in memory; a model that
//! is only on disk (from an earlier process) is reopened on first access
//! with the prioritization of its latest snapshot as draft.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::rejection::{BytesRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use goalvalue_core::analysis::{analyze_detailed, explain, AnalysisError};
use goalvalue_core::model::{self, GoalModel, Prioritization};
use goalvalue_core::propagation::{PropagationConfig, PropagationError};
use goalvalue_core::store::StoreError;
use goalvalue_core::Store;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::Mutex as AsyncMutex;

/// Default upper bound on uploaded images.
pub const DEFAULT_IMAGE_LIMIT: usize = 10 * 1024 * 1024;

/// Upper bound on JSON request bodies.
pub const JSON_BODY_LIMIT: usize = 16 * 1024 * 1024;

#[derive(Debug)]
struct Session {
    model: GoalModel,
    draft: Prioritization,
    latest_version: Option<u32>,
    image: Option<StoredImage>,
}

#[derive(Clone, Debug)]
struct StoredImage {
    content_type: &'static str,
    path: PathBuf,
}

pub struct AppState {
    store: Store,
    sessions: Mutex<HashMap<String, Arc<AsyncMutex<Session>>>>,
    image_limit: usize,
}

impl AppState {
    pub fn new(store: Store) -> Self {
        Self::with_image_limit(store, DEFAULT_IMAGE_LIMIT)
    }

    pub fn with_image_limit(store: Store, image_limit: usize) -> Self {
        AppState { store, sessions: Mutex::default(), image_limit }
    }

    fn session(&self, id: &str) -> Result<Arc<AsyncMutex<Session>>, ApiError> {
        if let Some(s) = self.sessions.lock().unwrap_or_else(|e| e.into_inner()).get(id) {
            return Ok(s.clone());
        }
        let model = match self.store.get_model(id) {
            Ok(m) => m,
            Err(StoreError::ModelNotFound(_) | StoreError::InvalidModelId(_)) => {
                return Err(ApiError::not_found(format!("unknown model '{id}'")))
            }
            Err(e) => return Err(e.into()),
        };
        let latest_version = self.store.latest_version(id)?;
        let draft = match latest_version {
            Some(v) => self.store.get(id, v)?.prioritization,
            None => Prioritization::default(),
        };
        let dir = self.store.model_dir(id)?;
        let image = IMAGE_FORMATS.iter().find_map(|f| {
            let path = dir.join(format!("image.{}", f.ext));
            path.is_file().then_some(StoredImage { content_type: f.content_type, path })
        });
        let session = Session { model, draft, latest_version, image };
        let mut sessions = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
        Ok(sessions.entry(id.to_string()).or_insert_with(|| Arc::new(AsyncMutex::new(session))).clone())
    }

    /// Picks `base`, or `base-2`, `base-3`, … if taken, and registers it.
    fn register(&self, mut model: GoalModel, draft: Prioritization) -> Result<String, ApiError> {
        self.store.model_dir(&model.id).map_err(|e| ApiError::bad_request(e.to_string()))?;
        let stored = self.store.models()?;
        let mut sessions = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
        let taken = |id: &str| sessions.contains_key(id) || stored.iter().any(|s| s == id);
        let base = model.id.clone();
        let mut n = 1;
        while taken(&model.id) {
            n += 1;
            model.id = format!("{base}-{n}");
        }
        model.image = None;
        self.store.put_model(&model)?;
        let id = model.id.clone();
        let session = Session { model, draft, latest_version: None, image: None };
        sessions.insert(id.clone(), Arc::new(AsyncMutex::new(session)));
        Ok(id)
    }
}

/// Error response with a JSON body `{"error": ..., ...}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, body: json!({ "error": message.into() }) }
    }

    fn with(mut self, key: &str, value: impl serde::Serialize) -> Self {
        self.body[key] = serde_json::to_value(value).expect("error detail serializes");
        self
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    /// 400 for malformed JSON, 422 for well-formed JSON of the wrong shape.
    fn from_json(e: serde_json::Error) -> Self {
        let err = if e.is_data() { Self::unprocessable(e.to_string()) } else { Self::bad_request(e.to_string()) };
        err.with("line", e.line()).with("column", e.column())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::VersionNotFound { .. } | StoreError::ModelNotFound(_) => ApiError::not_found(e.to_string()),
            StoreError::InvalidModelId(_) => ApiError::bad_request(e.to_string()),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        }
    }
}

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::MissingPriorities(missing) => {
                ApiError::new(StatusCode::CONFLICT, "prioritization is incomplete").with("missing", missing)
            }
            AnalysisError::InvalidModel(report) => {
                ApiError::unprocessable("model or prioritization has validation errors").with("report", report)
            }
            AnalysisError::NotAnElement(_) | AnalysisError::UnknownActor(_) => ApiError::not_found(e.to_string()),
            AnalysisError::Propagation(PropagationError::InvalidConfig(_)) => ApiError::unprocessable(e.to_string()),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        }
    }
}

impl From<BytesRejection> for ApiError {
    fn from(e: BytesRejection) -> Self {
        ApiError::new(e.status(), e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::new(e.status(), e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type AppRef = State<Arc<AppState>>;

pub fn router(state: AppState) -> Router {
    let limit = state.image_limit;
    Router::new()
        .route("/models", post(import_model))
        .route("/models/:id", get(get_model))
        .route("/models/:id/priorities", put(set_priorities))
        .route("/models/:id/analyze", post(run_analysis))
        .route("/models/:id/results/:version", get(get_result))
        .route("/models/:id/elements/:eid/provenance", get(get_provenance))
        .route("/models/:id/history", get(get_history))
        .route("/models/:id/diff", get(get_diff))
        .route("/models/:id/image", post(upload_image).layer(DefaultBodyLimit::max(limit)).get(get_image))
        .layer(DefaultBodyLimit::max(JSON_BODY_LIMIT))
        .with_state(Arc::new(state))
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, store: Store) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(AppState::new(store))).await
}

fn utf8(body: &Bytes) -> ApiResult<&str> {
    std::str::from_utf8(body).map_err(|e| ApiError::bad_request(format!("body is not UTF-8: {e}")))
}

async fn import_model(State(app): AppRef, body: Result<Bytes, BytesRejection>) -> ApiResult<(StatusCode, Json<Value>)> {
    let body = body?;
    let text = utf8(&body)?;
    let (model, draft, report) = model::load_any(text).map_err(|e| {
        let err = ApiError::bad_request(e.to_string());
        match &e {
            model::ImportError::Pistar(model::PistarError::Syntax { line, column, .. }) => {
                err.with("line", line).with("column", column)
            }
            model::ImportError::Pistar(model::PistarError::Schema { path, .. })
            | model::ImportError::Canonical(model::LoadError::Schema { path, .. }) => err.with("path", path),
            model::ImportError::Pistar(model::PistarError::MissingField(path)) => err.with("path", path),
            _ => err,
        }
    })?;
    let model_id = app.register(model, draft)?;
    Ok((StatusCode::CREATED, Json(json!({ "modelId": model_id, "report": report }))))
}

fn draft_body(session: &Session) -> Value {
    json!({
        "modelId": session.model.id,
        "prioritization": session.draft,
        "missing": session.draft.missing(&session.model),
        "latestVersion": session.latest_version,
    })
}

async fn get_model(State(app): AppRef, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let session = app.session(&id)?;
    let s = session.lock().await;
    let mut body = draft_body(&s);
    body["model"] = serde_json::to_value(&s.model).expect("model serializes");
    body["report"] = serde_json::to_value(model::validate_with(&s.model, Some(&s.draft))).expect("report serializes");
    Ok(Json(body))
}

async fn set_priorities(State(app): AppRef, Path(id): Path<String>, body: Result<Bytes, BytesRejection>) -> ApiResult<Json<Value>> {
    let session = app.session(&id)?;
    let body = body?;
    let patch: Prioritization = serde_json::from_slice(&body).map_err(ApiError::from_json)?;
    let mut s = session.lock().await;
    let mut unknown = patch.unknown_keys(&s.model);
    unknown.extend(patch.element_priorities.keys().filter(|k| s.model.is_dependum(k)).cloned());
    if !unknown.is_empty() {
        return Err(ApiError::unprocessable("unknown element or actor ids").with("unknown", unknown));
    }
    s.draft.merge(&patch);
    Ok(Json(draft_body(&s)))
}

async fn run_analysis(State(app): AppRef, Path(id): Path<String>, body: Result<Bytes, BytesRejection>) -> ApiResult<Json<Value>> {
    let session = app.session(&id)?;
    let body = body?;
    let config = if utf8(&body)?.trim().is_empty() {
        PropagationConfig::default()
    } else {
        serde_json::from_slice::<PropagationConfig>(&body).map_err(ApiError::from_json)?
    };
    // the session lock serializes analyses per model; distinct models run in parallel
    let mut s = session.lock().await;
    let (model, draft) = (s.model.clone(), s.draft.clone());
    let store = app.store.clone();
    let (version, result) = tokio::task::spawn_blocking(move || -> ApiResult<_> {
        let analysis = analyze_detailed(&model, &draft, &config)?;
        let version = store.record(&model.id, &draft, &analysis.result)?;
        Ok((version, analysis.result))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    s.latest_version = Some(version);
    Ok(Json(json!({ "version": version, "result": result })))
}

async fn get_result(State(app): AppRef, Path((id, version)): Path<(String, u32)>) -> ApiResult<Json<Value>> {
    app.session(&id)?;
    let snapshot = app.store.get(&id, version)?;
    Ok(Json(json!({ "version": version, "result": snapshot.result })))
}

#[derive(Deserialize)]
struct VersionQuery {
    version: Option<u32>,
}

async fn get_provenance(
    State(app): AppRef,
    Path((id, eid)): Path<(String, String)>,
    q: Result<Query<VersionQuery>, QueryRejection>,
) -> ApiResult<Json<Value>> {
    let session = app.session(&id)?;
    let Query(q) = q?;
    let model = session.lock().await.model.clone();
    let version = match q.version {
        Some(v) => v,
        None => app.store.latest_version(&id)?.ok_or_else(|| ApiError::not_found(format!("model '{id}' has no results")))?,
    };
    let snapshot = app.store.get(&id, version)?;
    if snapshot.result.element(&eid).is_none() {
        return Err(ApiError::not_found(format!("unknown element '{eid}'")));
    }
    // the snapshot keeps values, not impulse responses; recompute those from its inputs
    let provenance = tokio::task::spawn_blocking(move || -> ApiResult<_> {
        let analysis = analyze_detailed(&model, &snapshot.prioritization, &snapshot.config)?;
        Ok(explain(&snapshot.result, &model, &analysis.propagation, &eid)?)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(json!({ "version": version, "provenance": provenance })))
}

async fn get_history(State(app): AppRef, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    app.session(&id)?;
    Ok(Json(json!({ "modelId": id, "versions": app.store.history(&id)? })))
}

#[derive(Deserialize)]
struct DiffQuery {
    from: u32,
    to: u32,
}

async fn get_diff(State(app): AppRef, Path(id): Path<String>, q: Result<Query<DiffQuery>, QueryRejection>) -> ApiResult<Json<Value>> {
    app.session(&id)?;
    let Query(q) = q?;
    let diff = app.store.diff(&id, q.from, q.to)?;
    Ok(Json(serde_json::to_value(diff).expect("diff serializes")))
}

struct ImageFormat {
    ext: &'static str,
    content_type: &'static str,
    matches: fn(&[u8]) -> bool,
}

const IMAGE_FORMATS: &[ImageFormat] = &[
    ImageFormat { ext: "png", content_type: "image/png", matches: |b| b.starts_with(b"\x89PNG\r\n\x1a\n") },
    ImageFormat { ext: "jpg", content_type: "image/jpeg", matches: |b| b.starts_with(&[0xFF, 0xD8, 0xFF]) },
    ImageFormat {
        ext: "gif",
        content_type: "image/gif",
        matches: |b| b.starts_with(b"GIF87a") || b.starts_with(b"GIF89a"),
    },
    ImageFormat {
        ext: "webp",
        content_type: "image/webp",
        matches: |b| b.len() >= 12 && &b[..4] == b"RIFF" && &b[8..12] == b"WEBP",
    },
    ImageFormat { ext: "bmp", content_type: "image/bmp", matches: |b| b.starts_with(b"BM") && b.len() > 14 },
];

/// Format is decided by magic bytes; the declared content type is ignored.
fn sniff(bytes: &[u8]) -> Option<&'static ImageFormat> {
    IMAGE_FORMATS.iter().find(|f| (f.matches)(bytes))
}

async fn upload_image(State(app): AppRef, Path(id): Path<String>, body: Result<Bytes, BytesRejection>) -> ApiResult<(StatusCode, Json<Value>)> {
    let session = app.session(&id)?;
    let body = body?;
    if body.len() > app.image_limit {
        return Err(ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "image exceeds the size limit"));
    }
    let format = sniff(&body)
        .ok_or_else(|| ApiError::new(StatusCode::UNSUPPORTED_MEDIA_TYPE, "content is not a supported image"))?;
    let mut s = session.lock().await;
    let dir = app.store.model_dir(&id)?;
    for f in IMAGE_FORMATS {
        let _ = std::fs::remove_file(dir.join(format!("image.{}", f.ext)));
    }
    let path = dir.join(format!("image.{}", format.ext));
    std::fs::write(&path, &body).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let url = format!("/models/{id}/image");
    s.model.image = Some(url.clone());
    app.store.put_model(&s.model)?;
    s.image = Some(StoredImage { content_type: format.content_type, path });
    Ok((
        StatusCode::CREATED,
        Json(json!({ "url": url, "contentType": format.content_type, "bytes": body.len() })),
    ))
}

async fn get_image(State(app): AppRef, Path(id): Path<String>) -> ApiResult<Response> {
    let session = app.session(&id)?;
    let image = session.lock().await.image.clone().ok_or_else(|| ApiError::not_found("model has no image"))?;
    let bytes = std::fs::read(&image.path).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, image.content_type)], bytes).into_response())
}
