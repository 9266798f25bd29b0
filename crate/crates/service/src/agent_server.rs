//! One episode per connection: the server writes a frame, the agent replies
//! with exactly one line, until a `bye` frame closes the session.

use std::future::Future;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use inquest_core::rng::derive_seed;
use inquest_core::store::RecordStore;
use inquest_core::{Difficulty, EpisodeConfig, EpisodeRecord, Mode, QuestionType, ServerFrame, Session};
use tokio::io::{AsyncBufRead, AsyncBufReadExt, AsyncWrite, AsyncWriteExt, BufReader};
use tokio::net::TcpListener;

use crate::ServiceError;

#[derive(Debug, Clone)]
pub struct AgentServerConfig {
    pub difficulty: Difficulty,
    pub qtype: QuestionType,
    pub mode: Mode,
    /// Connection `i` plays `derive_seed(seed, "connection", i)`, or `seed`
    /// itself when `repeat_seed` is set.
    pub seed: u64,
    pub repeat_seed: bool,
    /// Include the ground-truth answer in result frames.
    pub reveal_truth: bool,
    pub idle_timeout: Option<Duration>,
    pub store: Option<Arc<RecordStore>>,
}

impl AgentServerConfig {
    pub fn new(difficulty: Difficulty, qtype: QuestionType, mode: Mode, seed: u64) -> Self {
        AgentServerConfig {
            difficulty,
            qtype,
            mode,
            seed,
            repeat_seed: false,
            reveal_truth: false,
            idle_timeout: None,
            store: None,
        }
    }

    pub fn episode_config(&self, connection: u64) -> EpisodeConfig {
        let seed = if self.repeat_seed { self.seed } else { derive_seed(self.seed, "connection", connection) };
        EpisodeConfig::new(self.difficulty, self.qtype, seed, self.mode)
    }
}

async fn send<W: AsyncWrite + Unpin>(writer: &mut W, frame: &ServerFrame) -> std::io::Result<()> {
    let mut line = frame.to_line();
    line.push('\n');
    writer.write_all(line.as_bytes()).await?;
    writer.flush().await
}

/// Plays `session` over a line stream. `first` is the frame returned when the
/// session started. Disconnects and idle timeouts abort the episode.
pub async fn serve_stream<R, W>(
    mut session: Session,
    first: ServerFrame,
    mut reader: R,
    mut writer: W,
    idle_timeout: Option<Duration>,
) -> Result<EpisodeRecord, ServiceError>
where
    R: AsyncBufRead + Unpin,
    W: AsyncWrite + Unpin,
{
    if let Err(e) = send(&mut writer, &first).await {
        session.abort("agent disconnected");
        return Err(e.into());
    }
    let mut line = String::new();
    while !session.is_finished() {
        line.clear();
        let read = reader.read_line(&mut line);
        let n = match idle_timeout {
            Some(limit) => match tokio::time::timeout(limit, read).await {
                Ok(n) => n,
                Err(_) => {
                    for f in session.fail("idle timeout") {
                        // best effort: the agent may be gone
                        let _ = send(&mut writer, &f).await;
                    }
                    break;
                }
            },
            None => read.await,
        };
        match n {
            Ok(0) | Err(_) => {
                session.abort("agent disconnected");
                break;
            }
            Ok(_) => {
                for f in session.handle_line(line.trim_end_matches(['\r', '\n'])) {
                    if send(&mut writer, &f).await.is_err() {
                        session.abort("agent disconnected");
                        break;
                    }
                }
            }
        }
    }
    Ok(session.into_record().expect("finished sessions hold a record"))
}

async fn run_connection<R, W>(config: &AgentServerConfig, index: u64, reader: R, writer: W) -> Result<EpisodeRecord, ServiceError>
where
    R: AsyncBufRead + Unpin,
    W: AsyncWrite + Unpin,
{
    let (session, first) = Session::start(config.episode_config(index), config.reveal_truth)?;
    let record = serve_stream(session, first, reader, writer, config.idle_timeout).await?;
    if let Some(store) = config.store.clone() {
        let name = format!("agent-{}", uuid::Uuid::new_v4());
        let rec = record.clone();
        tokio::task::spawn_blocking(move || store.save(&name, &rec)).await.expect("store task panicked")?;
    }
    Ok(record)
}

/// Accepts connections until `shutdown` resolves; each plays one episode.
pub async fn serve_tcp(
    listener: TcpListener,
    config: AgentServerConfig,
    shutdown: impl Future<Output = ()>,
) -> std::io::Result<()> {
    let config = Arc::new(config);
    let counter = AtomicU64::new(0);
    tokio::pin!(shutdown);
    loop {
        tokio::select! {
            _ = &mut shutdown => return Ok(()),
            accepted = listener.accept() => {
                let (stream, peer) = accepted?;
                let index = counter.fetch_add(1, Ordering::Relaxed);
                let config = Arc::clone(&config);
                tokio::spawn(async move {
                    let (r, w) = stream.into_split();
                    match run_connection(&config, index, BufReader::new(r), w).await {
                        Ok(rec) => tracing::info!(%peer, seed = rec.config.seed(), correct = rec.answer_correct, aborted = ?rec.aborted, "session finished"),
                        Err(e) => tracing::warn!(%peer, "session failed: {e}"),
                    }
                });
            }
        }
    }
}

/// Plays a single episode over standard input and output.
pub async fn serve_stdio(config: AgentServerConfig) -> Result<EpisodeRecord, ServiceError> {
    run_connection(&config, 0, BufReader::new(tokio::io::stdin()), tokio::io::stdout()).await
}
