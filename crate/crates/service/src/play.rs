//! HTTP + WebSocket sessions for human players.
//!
//! | route | |
//! |---|---|
//! | `POST /sessions` | `{difficulty, qtype, seed?, mode?}` → `{session_id, question, observation, ...}` |
//! | `GET /sessions/{id}/stream` | WebSocket; the agent line protocol, one message per turn |
//! | `POST /sessions/{id}/answer` | `{token}` → `{correct, ground_truth, sufficient_info}` |
//! | `GET /sessions/{id}/record` | the finished `EpisodeRecord` |

use std::collections::HashMap;
use std::future::Future;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex as StdMutex};
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use inquest_core::rng::derive_seed;
use inquest_core::store::{RecordStore, StoreError};
use inquest_core::{
    AgentMessage, Difficulty, EpisodeConfig, EpisodeRecord, Mode, ObsFrame, QuestionType, ServerFrame, Session,
};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::Mutex;
use tower_http::services::ServeDir;

#[derive(Clone)]
pub struct PlayConfig {
    pub store: Arc<RecordStore>,
    /// Sessions untouched for this long are aborted and their partial record saved.
    pub idle_timeout: Duration,
    pub static_dir: Option<PathBuf>,
    /// Seed stream for sessions created without an explicit seed.
    pub seed: u64,
}

struct Slot {
    session: Session,
    touched: Instant,
}

struct Inner {
    sessions: StdMutex<HashMap<String, Arc<Mutex<Slot>>>>,
    config: PlayConfig,
    created: AtomicU64,
}

#[derive(Clone)]
pub struct PlayState(Arc<Inner>);

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("unknown session '{0}'")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Episode(#[from] inquest_core::EpisodeError),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Store(_) | ApiError::Episode(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub difficulty: String,
    pub qtype: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub mode: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub question: String,
    pub observation: String,
    pub seed: u64,
    pub mode: Mode,
    pub max_steps: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnswerBody {
    pub token: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scored {
    pub correct: bool,
    pub ground_truth: Option<String>,
    /// Present for training sessions only.
    pub sufficient_info: Option<f64>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_hexdigit() || c == '-')
}

impl PlayState {
    pub fn new(config: PlayConfig) -> Self {
        PlayState(Arc::new(Inner { sessions: StdMutex::default(), config, created: AtomicU64::new(0) }))
    }

    pub fn store(&self) -> &RecordStore {
        &self.0.config.store
    }

    fn slot(&self, id: &str) -> Option<Arc<Mutex<Slot>>> {
        self.0.sessions.lock().unwrap_or_else(|e| e.into_inner()).get(id).cloned()
    }

    fn persisted(&self, id: &str) -> bool {
        valid_id(id) && self.0.config.store.dir().join(format!("{id}.json")).exists()
    }

    /// Registers a started session, e.g. one built around a hand-made world.
    pub fn insert(&self, session: Session) -> String {
        let id = uuid::Uuid::new_v4().to_string();
        let slot = Slot { session, touched: Instant::now() };
        self.0.sessions.lock().unwrap_or_else(|e| e.into_inner()).insert(id.clone(), Arc::new(Mutex::new(slot)));
        id
    }

    pub fn create(&self, req: &CreateSession) -> Result<(String, Created), ApiError> {
        let difficulty: Difficulty = req.difficulty.parse().map_err(ApiError::BadRequest)?;
        let qtype: QuestionType = req.qtype.parse().map_err(ApiError::BadRequest)?;
        let mode: Mode = req.mode.as_deref().unwrap_or("test").parse().map_err(ApiError::BadRequest)?;
        let seed = req.seed.unwrap_or_else(|| {
            derive_seed(self.0.config.seed, "session", self.0.created.fetch_add(1, Ordering::Relaxed))
        });
        let config = EpisodeConfig::new(difficulty, qtype, seed, mode);
        let max_steps = config.max_steps;
        // humans see the ground truth once they have answered
        let (session, _) = Session::start(config, true)?;
        let first = session.last_obs().clone();
        let id = self.insert(session);
        tracing::info!(%id, seed, %difficulty, %qtype, "session created");
        Ok((id.clone(), Created { session_id: id, question: first.question, observation: first.observation, seed, mode, max_steps }))
    }

    /// Saves the record of a finished session and forgets it.
    async fn retire(&self, id: &str, record: EpisodeRecord) -> Result<(), ApiError> {
        let store = Arc::clone(&self.0.config.store);
        let name = id.to_owned();
        tokio::task::spawn_blocking(move || store.save(&name, &record)).await.expect("store task panicked")?;
        self.0.sessions.lock().unwrap_or_else(|e| e.into_inner()).remove(id);
        Ok(())
    }

    /// Runs one agent line against a session; returns the frames to send.
    pub async fn handle_line(&self, id: &str, line: &str) -> Result<Vec<ServerFrame>, ApiError> {
        let slot = self.slot(id).ok_or_else(|| ApiError::NotFound(id.to_owned()))?;
        let mut guard = slot.lock().await;
        guard.touched = Instant::now();
        let frames = guard.session.handle_line(line);
        if let Some(rec) = guard.session.record().cloned() {
            self.retire(id, rec).await?;
        }
        Ok(frames)
    }

    pub async fn answer(&self, id: &str, token: &str) -> Result<Scored, ApiError> {
        let Some(slot) = self.slot(id) else {
            return Err(if self.persisted(id) {
                ApiError::Conflict("session already finished".into())
            } else {
                ApiError::NotFound(id.to_owned())
            });
        };
        let mut guard = slot.lock().await;
        if guard.session.is_finished() {
            return Err(ApiError::Conflict("session already finished".into()));
        }
        guard.touched = Instant::now();
        let frames = guard.session.handle(AgentMessage::answer(token));
        if let Some(rec) = guard.session.record().cloned() {
            self.retire(id, rec).await?;
        }
        match frames.into_iter().next() {
            Some(ServerFrame::Result(r)) => {
                Ok(Scored { correct: r.correct, ground_truth: r.ground_truth, sufficient_info: r.sufficient_info })
            }
            Some(ServerFrame::Error(e)) => Err(ApiError::BadRequest(e.message)),
            other => unreachable!("answers produce a result or an error, got {other:?}"),
        }
    }

    pub async fn record(&self, id: &str) -> Result<EpisodeRecord, ApiError> {
        if let Some(slot) = self.slot(id) {
            let guard = slot.lock().await;
            return guard
                .session
                .record()
                .cloned()
                .ok_or_else(|| ApiError::Conflict("session still in progress".into()));
        }
        if !self.persisted(id) {
            return Err(ApiError::NotFound(id.to_owned()));
        }
        let store = Arc::clone(&self.0.config.store);
        let file = format!("{id}.json");
        Ok(tokio::task::spawn_blocking(move || store.load(&file)).await.expect("store task panicked")?)
    }

    /// The frame a (re)connecting client starts from.
    async fn current(&self, id: &str) -> Option<ObsFrame> {
        let slot = self.slot(id)?;
        let guard = slot.lock().await;
        let mut obs = guard.session.last_obs().clone();
        obs.lexicons = Some(guard.session.episode().world().lexicons().clone());
        Some(obs)
    }

    /// Aborts every session idle for longer than the configured limit.
    pub async fn sweep(&self) -> usize {
        let slots: Vec<(String, Arc<Mutex<Slot>>)> =
            self.0.sessions.lock().unwrap_or_else(|e| e.into_inner()).iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let mut swept = 0;
        for (id, slot) in slots {
            let mut guard = slot.lock().await;
            if guard.touched.elapsed() < self.0.config.idle_timeout || guard.session.is_finished() {
                continue;
            }
            let rec = guard.session.abort("idle timeout").clone();
            match self.retire(&id, rec).await {
                Ok(()) => swept += 1,
                Err(e) => tracing::warn!(%id, "could not save timed-out session: {e}"),
            }
            tracing::info!(%id, "session timed out");
        }
        swept
    }

    pub fn live_sessions(&self) -> usize {
        self.0.sessions.lock().unwrap_or_else(|e| e.into_inner()).len()
    }
}

async fn create(State(state): State<PlayState>, Json(req): Json<CreateSession>) -> Result<Json<Created>, ApiError> {
    let (_, created) = state.create(&req)?;
    Ok(Json(created))
}

async fn answer(
    State(state): State<PlayState>,
    Path(id): Path<String>,
    Json(body): Json<AnswerBody>,
) -> Result<Json<Scored>, ApiError> {
    Ok(Json(state.answer(&id, &body.token).await?))
}

async fn record(State(state): State<PlayState>, Path(id): Path<String>) -> Result<Json<EpisodeRecord>, ApiError> {
    Ok(Json(state.record(&id).await?))
}

async fn stream(State(state): State<PlayState>, Path(id): Path<String>, ws: WebSocketUpgrade) -> Response {
    if state.slot(&id).is_none() {
        return ApiError::NotFound(id).into_response();
    }
    ws.on_upgrade(move |socket| play_socket(state, id, socket))
}

async fn play_socket(state: PlayState, id: String, socket: WebSocket) {
    let (mut tx, mut rx) = socket.split();
    let Some(first) = state.current(&id).await else {
        return;
    };
    if tx.send(Message::Text(ServerFrame::Obs(first).to_line().into())).await.is_err() {
        return;
    }
    while let Some(msg) = rx.next().await {
        let line = match msg {
            Ok(Message::Text(t)) => t.to_string(),
            Ok(Message::Close(_)) | Err(_) => break,
            Ok(_) => continue,
        };
        let frames = match state.handle_line(&id, line.trim()).await {
            Ok(f) => f,
            Err(e) => {
                let frame = json!({"type": "error", "version": inquest_core::protocol::PROTOCOL_VERSION, "message": e.to_string(), "fatal": true});
                let _ = tx.send(Message::Text(frame.to_string().into())).await;
                break;
            }
        };
        let closing = frames.iter().any(|f| matches!(f, ServerFrame::Bye(_)));
        for f in frames {
            if tx.send(Message::Text(f.to_line().into())).await.is_err() {
                return;
            }
        }
        if closing {
            break;
        }
    }
    let _ = tx.send(Message::Close(None)).await;
}

pub fn router(state: PlayState) -> Router {
    let static_dir = state.0.config.static_dir.clone();
    let api = Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/stream", get(stream))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/record", get(record))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves the play API until `shutdown` resolves, sweeping idle sessions in the background.
pub async fn serve_play(
    listener: TcpListener,
    config: PlayConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let state = PlayState::new(config);
    let period = (state.0.config.idle_timeout / 4).clamp(Duration::from_millis(10), Duration::from_secs(5));
    let sweeper = {
        let state = state.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(period);
            loop {
                tick.tick().await;
                state.sweep().await;
            }
        })
    };
    let result = axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await;
    sweeper.abort();
    result
}
