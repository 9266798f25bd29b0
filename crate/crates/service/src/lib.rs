//! Network and process transports for episodes.
//!
//! * [`agent_server`]: one episode per connection over JSON lines (TCP or stdio).
//! * [`subprocess`]: drives an external program as an in-process [`inquest_core::Agent`].
//! * [`play`]: HTTP + WebSocket sessions for human players.

pub mod agent_server;
pub mod play;
pub mod subprocess;

pub use agent_server::{serve_stdio, serve_stream, serve_tcp, AgentServerConfig};
pub use play::{router, serve_play, PlayConfig, PlayState};
pub use subprocess::SubprocessAgent;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Episode(#[from] inquest_core::EpisodeError),
    #[error(transparent)]
    Store(#[from] inquest_core::store::StoreError),
}
