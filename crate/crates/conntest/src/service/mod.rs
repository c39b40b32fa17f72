//! The wizard over HTTP.
//!
//! | route | body | reply |
//! |---|---|---|
//! | `POST /sessions` | [`CreateRequest`] | 201, [`SessionState`] |
//! | `GET /sessions` | | `{"sessions": [summary]}` |
//! | `GET /sessions/{id}` | | [`SessionState`] |
//! | `POST /sessions/{id}/answer` | [`AnswerRequest`] | [`SessionState`] |
//!
//! Errors reply `{"error": {"code", "message"}}` with one of the codes of
//! [`ServiceError::code`].

pub mod session;
pub mod store;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use thiserror::Error;

pub use session::{Answer, AnswerRequest, CreateRequest, Engine, SessionState, SessionStatus};
pub use store::Store;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no session `{0}`")]
    NotFound(String),
    #[error("{0}")]
    InvalidRequest(String),
    #[error("{0}")]
    InvalidGraph(String),
    #[error("{0}")]
    InvalidHeuristic(String),
    #[error("edge `{got}` is not the pending proposal `{pending}`")]
    NotPending { pending: String, got: String },
    #[error("session is closed ({0:?})")]
    Closed(SessionStatus),
    #[error("session is at version {current}, not {expected}")]
    VersionConflict { expected: u64, current: u64 },
    #[error("{0}")]
    Internal(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) => "not_found",
            ServiceError::InvalidRequest(_) => "invalid_request",
            ServiceError::InvalidGraph(_) => "invalid_graph",
            ServiceError::InvalidHeuristic(_) => "invalid_heuristic",
            ServiceError::NotPending { .. } => "not_pending",
            ServiceError::Closed(_) => "session_closed",
            ServiceError::VersionConflict { .. } => "version_conflict",
            ServiceError::Internal(_) => "internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::InvalidGraph(_) | ServiceError::InvalidHeuristic(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::NotPending { .. } | ServiceError::Closed(_) | ServiceError::VersionConflict { .. } => {
                StatusCode::CONFLICT
            }
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if let ServiceError::Internal(msg) = &self {
            tracing::error!(%msg, "internal error");
        }
        let body = json!({ "error": { "code": self.code(), "message": self.to_string() } });
        (self.status(), Json(body)).into_response()
    }
}

impl From<JsonRejection> for ServiceError {
    fn from(e: JsonRejection) -> Self {
        ServiceError::InvalidRequest(e.body_text())
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub store: PathBuf,
    /// Per-step time limit for tree heuristics; on breach the step uses H1.
    pub step_time_limit_ms: u64,
}

#[derive(Clone)]
pub struct AppState {
    store: Arc<Store>,
    engines: Arc<Mutex<HashMap<String, Arc<Engine>>>>,
    step_ms: u64,
}

impl AppState {
    pub fn new(store: Store, step_ms: u64) -> Self {
        Self {
            store: Arc::new(store),
            engines: Arc::default(),
            step_ms,
        }
    }

    fn engine(&self, state: &SessionState) -> Result<Arc<Engine>, ServiceError> {
        if let Some(e) = self.engines.lock().expect("engine cache").get(&state.id) {
            return Ok(e.clone());
        }
        let engine = Arc::new(Engine::for_state(state, self.step_ms)?);
        self.engines.lock().expect("engine cache").insert(state.id.clone(), engine.clone());
        Ok(engine)
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

/// Runs blocking session work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))?
}

async fn create_session(
    State(app): State<AppState>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionState>), ServiceError> {
    let Json(req) = body?;
    let state = blocking(move || {
        let id = uuid::Uuid::new_v4().to_string();
        let (state, engine) = session::create(&req, id, now_ms(), app.step_ms)?;
        let state = app.store.insert(state)?;
        app.engines.lock().expect("engine cache").insert(state.id.clone(), Arc::new(engine));
        Ok(state)
    })
    .await?;
    tracing::info!(id = %state.id, heuristic = %state.heuristic, "session created");
    Ok((StatusCode::CREATED, Json((*state).clone())))
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionState>, ServiceError> {
    let state = app.store.get(&id).ok_or(ServiceError::NotFound(id))?;
    Ok(Json((*state).clone()))
}

async fn list_sessions(State(app): State<AppState>) -> Json<serde_json::Value> {
    let sessions: Vec<_> = app
        .store
        .list()
        .iter()
        .map(|s| {
            json!({
                "id": s.id,
                "version": s.version,
                "status": s.status,
                "heuristic": s.heuristic,
                "remaining": s.remaining,
                "created_ms": s.created_ms,
            })
        })
        .collect();
    Json(json!({ "sessions": sessions }))
}

async fn answer_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<AnswerRequest>, JsonRejection>,
) -> Result<Json<SessionState>, ServiceError> {
    let Json(req) = body?;
    let state = blocking(move || {
        let current = app.store.get(&id).ok_or(ServiceError::NotFound(id))?;
        let engine = app.engine(&current)?;
        let next = session::answer(&current, &engine, &req, now_ms())?;
        app.store.commit(current.version, next)
    })
    .await?;
    Ok(Json((*state).clone()))
}

pub fn router(app: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/answer", post(answer_session))
        .with_state(app)
}

/// Serves until the process is stopped.
pub fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    tracing_subscriber::fmt().try_init().ok();
    let store = Store::open(&config.store)?;
    let app = router(AppState::new(store, config.step_time_limit_ms));
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        tracing::info!(%addr, store = %config.store.display(), "listening");
        axum::serve(listener, app).await
    })
}
