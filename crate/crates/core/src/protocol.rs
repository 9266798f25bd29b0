//! JSON-lines message protocol between the engine and an agent.
//!
//! The server sends `obs`, `result`, `error` and `bye` frames; the agent
//! replies to every `obs` frame and every non-fatal `error` frame with exactly
//! one `cmd` or `answer` message. Every frame carries the protocol version.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::{Episode, EpisodeConfig, EpisodeRecord, Mode, StepOutcome, TrainInfo};
use crate::error::EpisodeError;
use crate::question::QuestionType;
use crate::world::Lexicons;

pub const PROTOCOL_VERSION: u32 = 1;

/// Consecutive non-fatal protocol errors tolerated before the session is closed.
pub const MAX_CONSECUTIVE_ERRORS: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsFrame {
    pub version: u32,
    pub step: u32,
    pub observation: String,
    pub feedback: String,
    pub question: String,
    pub qtype: QuestionType,
    pub done: bool,
    pub mode: Mode,
    pub max_steps: u32,
    /// Sent with the first frame of an episode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicons: Option<Lexicons>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_only: Option<TrainInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFrame {
    pub version: u32,
    pub correct: bool,
    pub answer: String,
    /// Revealed to human players and debug sessions only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<String>,
    /// Training mode only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sufficient_info: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorFrame {
    pub version: u32,
    pub message: String,
    /// A fatal error is followed by `bye`; a non-fatal one expects a new reply.
    pub fatal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByeFrame {
    pub version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerFrame {
    Obs(ObsFrame),
    Result(ResultFrame),
    Error(ErrorFrame),
    Bye(ByeFrame),
}

impl ServerFrame {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("frames serialize")
    }

    /// Whether the agent must reply to this frame.
    pub fn expects_reply(&self) -> bool {
        match self {
            ServerFrame::Obs(_) => true,
            ServerFrame::Error(e) => !e.fatal,
            _ => false,
        }
    }

    fn error(message: impl Into<String>, fatal: bool) -> Self {
        ServerFrame::Error(ErrorFrame { version: PROTOCOL_VERSION, message: message.into(), fatal })
    }

    fn bye() -> Self {
        ServerFrame::Bye(ByeFrame { version: PROTOCOL_VERSION })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AgentMessage {
    Cmd { text: String },
    Answer { token: String },
}

impl AgentMessage {
    pub fn cmd(text: impl Into<String>) -> Self {
        AgentMessage::Cmd { text: text.into() }
    }

    pub fn answer(token: impl Into<String>) -> Self {
        AgentMessage::Answer { token: token.into() }
    }

    pub fn to_line(&self) -> String {
        let mut v = serde_json::to_value(self).expect("messages serialize");
        v["version"] = PROTOCOL_VERSION.into();
        v.to_string()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AgentError {
    #[error("agent failed: {0}")]
    Failed(String),
    #[error("agent timed out after {0} ms")]
    Timeout(u64),
    #[error("agent disconnected")]
    Disconnected,
}

/// Anything that can play an episode through the protocol.
pub trait Agent: Send {
    /// Chooses the reply to an observation frame. Must answer once `frame.done` is set.
    fn act(&mut self, frame: &ObsFrame) -> Result<AgentMessage, AgentError>;

    /// Called with each non-fatal error frame before the agent is asked again.
    fn on_error(&mut self, _frame: &ErrorFrame) {}
}

/// Protocol state for one episode, shared by in-process and networked agents.
pub struct Session {
    episode: Episode,
    reveal_truth: bool,
    last_obs: ObsFrame,
    consecutive_errors: u32,
    record: Option<EpisodeRecord>,
}

impl Session {
    /// Starts the episode and returns the first observation frame.
    pub fn start(config: EpisodeConfig, reveal_truth: bool) -> Result<(Session, ServerFrame), EpisodeError> {
        let (episode, first) = Episode::start(config)?;
        Ok(Self::wrap(episode, &first, reveal_truth))
    }

    /// Wraps an episode that was just started, e.g. with `Episode::start_with`.
    pub fn wrap(episode: Episode, first: &StepOutcome, reveal_truth: bool) -> (Session, ServerFrame) {
        let mut obs = obs_frame(&episode, first);
        obs.lexicons = Some(episode.world().lexicons().clone());
        let session =
            Session { episode, reveal_truth, last_obs: obs.clone(), consecutive_errors: 0, record: None };
        (session, ServerFrame::Obs(obs))
    }

    pub fn episode(&self) -> &Episode {
        &self.episode
    }

    pub fn last_obs(&self) -> &ObsFrame {
        &self.last_obs
    }

    pub fn is_finished(&self) -> bool {
        self.record.is_some()
    }

    pub fn record(&self) -> Option<&EpisodeRecord> {
        self.record.as_ref()
    }

    pub fn into_record(self) -> Option<EpisodeRecord> {
        self.record
    }

    /// Handles one raw line from the agent. Malformed JSON closes the session.
    pub fn handle_line(&mut self, line: &str) -> Vec<ServerFrame> {
        match serde_json::from_str::<AgentMessage>(line) {
            Ok(msg) => self.handle(msg),
            Err(e) => self.fail(&format!("malformed message: {e}")),
        }
    }

    pub fn handle(&mut self, msg: AgentMessage) -> Vec<ServerFrame> {
        if self.is_finished() {
            return vec![ServerFrame::error("session is closed", true), ServerFrame::bye()];
        }
        match msg {
            AgentMessage::Cmd { text } => match self.episode.step(&text) {
                Ok(outcome) => {
                    self.consecutive_errors = 0;
                    let obs = obs_frame(&self.episode, &outcome);
                    self.last_obs = obs.clone();
                    vec![ServerFrame::Obs(obs)]
                }
                Err(e) => self.soft_error(e.to_string()),
            },
            AgentMessage::Answer { token } => match self.episode.answer(&token) {
                Ok(record) => {
                    let result = ResultFrame {
                        version: PROTOCOL_VERSION,
                        correct: record.answer_correct,
                        answer: record.answer.clone().unwrap_or_default(),
                        ground_truth: self.reveal_truth.then(|| record.question.answer.clone()),
                        sufficient_info: (record.config.mode == Mode::Train).then_some(record.sufficient_info.total),
                    };
                    self.record = Some(record);
                    vec![ServerFrame::Result(result), ServerFrame::bye()]
                }
                Err(e) => self.soft_error(e.to_string()),
            },
        }
    }

    fn soft_error(&mut self, message: String) -> Vec<ServerFrame> {
        self.consecutive_errors += 1;
        if self.consecutive_errors >= MAX_CONSECUTIVE_ERRORS {
            return self.fail(&format!("too many protocol errors; last: {message}"));
        }
        vec![ServerFrame::error(message, false)]
    }

    /// Closes the session with a fatal error; the episode is recorded as aborted.
    pub fn fail(&mut self, message: &str) -> Vec<ServerFrame> {
        if !self.is_finished() {
            self.record = Some(self.episode.abort(message));
        }
        vec![ServerFrame::error(message, true), ServerFrame::bye()]
    }

    /// Ends the session without frames, e.g. on disconnect or timeout.
    pub fn abort(&mut self, reason: &str) -> &EpisodeRecord {
        if !self.is_finished() {
            self.record = Some(self.episode.abort(reason));
        }
        self.record.as_ref().expect("just set")
    }
}

fn obs_frame(episode: &Episode, outcome: &StepOutcome) -> ObsFrame {
    ObsFrame {
        version: PROTOCOL_VERSION,
        step: outcome.step,
        observation: outcome.observation.clone(),
        feedback: outcome.feedback.clone(),
        question: episode.question().text.clone(),
        qtype: episode.question().qtype,
        done: outcome.done,
        mode: episode.config().mode,
        max_steps: episode.config().max_steps,
        lexicons: None,
        train_only: match episode.config().mode {
            Mode::Train => outcome.train_only.clone(),
            Mode::Test => None,
        },
    }
}
