//! JSON-over-HTTP sessions for interactive what-if runs.
//!
//! Every session owns a committed world. Mutating calls on one session are
//! serialized behind a lock and run on the blocking pool; reads go to a
//! snapshot that is swapped after each commit, so they never wait for a run.

mod error;
pub mod session;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use resched_core::model::{DisruptionEvent, Intervention};
use resched_core::scenario::load_scenario;
use serde::Deserialize;
use serde_json::json;
use tokio::sync::Mutex;

pub use error::ApiError;
use session::{diff, world_view, Action, SessionCore, Snapshot};

struct Session {
    core: Arc<Mutex<SessionCore>>,
    snapshot: RwLock<Arc<Snapshot>>,
}

impl Session {
    fn read(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    fn publish(&self, snapshot: Snapshot) {
        *self.snapshot.write().expect("snapshot lock") = Arc::new(snapshot);
    }
}

#[derive(Default)]
struct AppState {
    sessions: RwLock<BTreeMap<String, Arc<Session>>>,
    next_id: AtomicU64,
    token: Option<String>,
}

impl AppState {
    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions.read().expect("session map").get(id).cloned().ok_or_else(|| ApiError::UnknownSession(id.into()))
    }
}

#[derive(Debug, Clone, Default)]
pub struct ServerConfig {
    /// Directory served for every path the API does not claim.
    pub static_dir: Option<PathBuf>,
    /// When set, session routes require `Authorization: Bearer <token>`.
    pub token: Option<String>,
}

type Shared = Arc<AppState>;

pub fn router(config: ServerConfig) -> Router {
    let state: Shared = Arc::new(AppState { token: config.token, ..Default::default() });
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/world", get(get_world))
        .route("/sessions/{id}/disruptions", post(post_disruptions))
        .route("/sessions/{id}/interventions", post(post_intervention))
        .route("/sessions/{id}/step", post(post_step))
        .route("/sessions/{id}/kpis", get(get_kpis))
        .route("/sessions/{id}/trace", get(get_trace))
        .route("/sessions/{id}/diff", get(get_diff))
        .route("/sessions/{id}/history", get(get_history))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    let app = Router::new().route("/health", get(|| async { Json(json!({ "status": "ok" })) })).merge(api);
    let app = match config.static_dir {
        Some(dir) => app.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => app,
    };
    app.with_state(state)
}

pub async fn serve(addr: SocketAddr, config: ServerConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(config)).await
}

async fn require_token(State(state): State<Shared>, req: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let given = req.headers().get(header::AUTHORIZATION).and_then(|v| v.to_str().ok());
        if given.and_then(|v| v.strip_prefix("Bearer ")) != Some(token.as_str()) {
            return ApiError::Unauthorized.into_response();
        }
    }
    next.run(req).await
}

fn parse<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad(format!("invalid body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::Internal(e.to_string()))?
}

async fn create_session(State(state): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let core = blocking(move || SessionCore::new(load_scenario(&body)?)).await?;
    let id = format!("s{}", state.next_id.fetch_add(1, Ordering::Relaxed) + 1);
    let session = Session { snapshot: RwLock::new(Arc::new(core.snapshot())), core: Arc::new(Mutex::new(core)) };
    state.sessions.write().expect("session map").insert(id.clone(), Arc::new(session));
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))).into_response())
}

async fn get_session(State(state): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let snap = state.session(&id)?.read();
    Ok(Json(json!({
        "id": id,
        "horizon_days": snap.world.horizon_days(),
        "history_len": snap.history.len(),
        "stepping": snap.stepping,
        "kpis": snap.kpis,
    }))
    .into_response())
}

async fn delete_session(State(state): State<Shared>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    state.sessions.write().expect("session map").remove(&id).ok_or(ApiError::UnknownSession(id))?;
    Ok(StatusCode::NO_CONTENT)
}

async fn get_world(State(state): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let snap = state.session(&id)?.read();
    Ok(Json(world_view(&snap.world)).into_response())
}

async fn get_kpis(State(state): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(state.session(&id)?.read().kpis.clone()).into_response())
}

#[derive(Deserialize)]
struct TraceQuery {
    #[serde(default)]
    format: Option<String>,
}

async fn get_trace(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<TraceQuery>,
) -> Result<Response, ApiError> {
    let snap = state.session(&id)?.read();
    match q.format.as_deref() {
        Some("jsonl") => Ok((
            [(header::CONTENT_TYPE, "application/x-ndjson")],
            resched_core::engine::to_jsonl(&snap.trace),
        )
            .into_response()),
        None | Some("json") => Ok(Json(snap.trace.clone()).into_response()),
        Some(other) => Err(ApiError::bad(format!("unknown trace format `{other}`"))),
    }
}

async fn get_diff(State(state): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let snap = state.session(&id)?.read();
    Ok(Json(diff(&snap.initial, &snap.world)).into_response())
}

async fn get_history(State(state): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(state.session(&id)?.read().history.clone()).into_response())
}

#[derive(Deserialize)]
struct RunQuery {
    #[serde(default)]
    sandbox: bool,
}

/// A single event or a list of events.
#[derive(Deserialize)]
#[serde(untagged)]
enum Events {
    One(DisruptionEvent),
    Many(Vec<DisruptionEvent>),
    Wrapped { events: Vec<DisruptionEvent> },
}

impl Events {
    fn into_vec(self) -> Vec<DisruptionEvent> {
        match self {
            Events::One(e) => vec![e],
            Events::Many(v) | Events::Wrapped { events: v } => v,
        }
    }
}

async fn run_action(state: &Shared, id: &str, action: Action, sandbox: bool) -> Result<Response, ApiError> {
    let session = state.session(id)?;
    let guard = session.core.clone().lock_owned().await;
    let summary = blocking(move || {
        let mut core = guard;
        let summary = core.run(action, sandbox)?;
        // publish before the lock is released so snapshots follow commit order
        if !sandbox {
            session.publish(core.snapshot());
        }
        Ok(summary)
    })
    .await?;
    Ok(Json(summary).into_response())
}

async fn post_disruptions(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<RunQuery>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let events = parse::<Events>(&body)?.into_vec();
    run_action(&state, &id, Action::Disruption { events }, q.sandbox).await
}

async fn post_intervention(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<RunQuery>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let intervention: Intervention = parse(&body)?;
    run_action(&state, &id, Action::Intervention { intervention }, q.sandbox).await
}

async fn post_step(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let session = state.session(&id)?;
    let action = if body.iter().all(u8::is_ascii_whitespace) {
        None
    } else {
        Some(match parse::<Action>(&body) {
            Ok(a) => a,
            Err(_) => Action::Disruption { events: parse::<Events>(&body)?.into_vec() },
        })
    };
    let guard = session
        .core
        .clone()
        .try_lock_owned()
        .map_err(|_| ApiError::Conflict("a run is in progress on this session".into()))?;
    let response = blocking(move || {
        let mut core = guard;
        let response = core.step(action);
        session.publish(core.snapshot());
        response
    })
    .await?;
    Ok(Json(response).into_response())
}
