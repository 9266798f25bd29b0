use std::collections::VecDeque;

use crate::episode::EpisodeRecord;
use crate::protocol::{Agent, AgentError, AgentMessage, ObsFrame};

/// Plays a fixed command list, then answers with a fixed token.
pub struct ScriptedAgent {
    commands: VecDeque<String>,
    answer: String,
}

impl ScriptedAgent {
    pub fn new<I, S>(commands: I, answer: impl Into<String>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedAgent { commands: commands.into_iter().map(Into::into).collect(), answer: answer.into() }
    }

    /// Replays a recorded transcript and gives the recorded answer.
    pub fn from_record(record: &EpisodeRecord) -> Self {
        Self::new(record.commands().map(str::to_owned), record.answer.clone().unwrap_or_default())
    }
}

impl Agent for ScriptedAgent {
    fn act(&mut self, frame: &ObsFrame) -> Result<AgentMessage, AgentError> {
        if frame.done {
            return Ok(AgentMessage::answer(self.answer.clone()));
        }
        Ok(AgentMessage::cmd(self.commands.pop_front().unwrap_or_else(|| "wait".to_owned())))
    }
}
