//! Baseline agents that play through the protocol.

mod explorer;
mod random;
pub mod reader;
mod scripted;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use explorer::ExplorerAgent;
pub use random::{answer_candidates, RandomAnswerAgent, RandomCommandAgent};
pub use scripted::ScriptedAgent;

use crate::protocol::Agent;
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    Random,
    RandomCmd,
    Explorer,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [AgentKind::Random, AgentKind::RandomCmd, AgentKind::Explorer];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Random => "random",
            AgentKind::RandomCmd => "random-cmd",
            AgentKind::Explorer => "explorer",
        }
    }

    /// Builds the agent for one episode; random agents draw from a stream
    /// derived from the game seed so runs are reproducible.
    pub fn build(self, game_seed: u64) -> Box<dyn Agent> {
        let seed = derive_seed(game_seed, "agent", 0);
        match self {
            AgentKind::Random => Box::new(RandomAnswerAgent::new(seed)),
            AgentKind::RandomCmd => Box::new(RandomCommandAgent::new(seed)),
            AgentKind::Explorer => Box::new(ExplorerAgent::new()),
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown agent '{s}' (expected random, random-cmd or explorer)"))
    }
}
