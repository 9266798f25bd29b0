//! Interactive question-answering text games: world generation, command
//! interpretation, question generation, reward oracles, episode running,
//! baseline agents, evaluation and dataset export.

pub mod agents;
pub mod command;
pub mod episode;
pub mod error;
pub mod eval;
pub mod export;
pub mod gen;
pub mod names;
pub mod protocol;
pub mod question;
pub mod reward;
pub mod rng;
pub mod runner;
pub mod store;
pub mod templates;
pub mod world;

pub use agents::AgentKind;
pub use command::{apply, apply_str, parse, render_observation, valid_commands, Command, Feedback, Verb};
pub use episode::{replay, Episode, EpisodeConfig, EpisodeRecord, Mode, StepOutcome};
pub use error::{EpisodeError, GenError, QuestionError, WorldError};
pub use gen::{generate_world, Difficulty, GenConfig};
pub use protocol::{Agent, AgentError, AgentMessage, ObsFrame, ServerFrame, Session};
pub use question::{make_question, Question, QuestionType};
pub use reward::Sufficiency;
pub use runner::{run_batch, run_episode, RunOptions};
pub use world::{Attribute, Direction, Lexicons, World};
