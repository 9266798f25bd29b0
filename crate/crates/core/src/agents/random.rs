use crate::protocol::{Agent, AgentError, AgentMessage, ObsFrame};
use crate::question::QuestionType;
use crate::rng::SplitMix64;
use crate::world::{Direction, Lexicons};

/// Answer candidates for a question type given the episode lexicons.
///
/// Location answers are any object word that is not a direction, plus
/// "inventory"; the other types are yes/no.
pub fn answer_candidates(qtype: QuestionType, lexicons: &Lexicons) -> Vec<String> {
    match qtype {
        QuestionType::Location => {
            let mut out: Vec<String> =
                lexicons.objects.iter().filter(|o| Direction::parse(o).is_none()).cloned().collect();
            if !out.iter().any(|o| o == "inventory") {
                out.push("inventory".to_owned());
            }
            out
        }
        _ => vec!["yes".to_owned(), "no".to_owned()],
    }
}

/// Waits immediately and answers uniformly at random.
pub struct RandomAnswerAgent {
    rng: SplitMix64,
    candidates: Vec<String>,
}

impl RandomAnswerAgent {
    pub fn new(seed: u64) -> Self {
        RandomAnswerAgent { rng: SplitMix64::new(seed), candidates: Vec::new() }
    }
}

impl Agent for RandomAnswerAgent {
    fn act(&mut self, frame: &ObsFrame) -> Result<AgentMessage, AgentError> {
        if let Some(lex) = &frame.lexicons {
            self.candidates = answer_candidates(frame.qtype, lex);
        }
        if !frame.done {
            return Ok(AgentMessage::cmd("wait"));
        }
        let token = self.rng.choose(&self.candidates).cloned().unwrap_or_else(|| "no".to_owned());
        Ok(AgentMessage::answer(token))
    }
}

/// Issues random commands from the lexicons, waits with probability
/// `p_wait` per step, then answers uniformly at random.
pub struct RandomCommandAgent {
    rng: SplitMix64,
    p_wait: f64,
    p_drop_modifier: f64,
    lexicons: Option<Lexicons>,
    candidates: Vec<String>,
}

impl RandomCommandAgent {
    pub const DEFAULT_P_WAIT: f64 = 0.05;
    pub const DEFAULT_P_DROP_MODIFIER: f64 = 0.5;

    pub fn new(seed: u64) -> Self {
        Self::with_params(seed, Self::DEFAULT_P_WAIT, Self::DEFAULT_P_DROP_MODIFIER)
    }

    pub fn with_params(seed: u64, p_wait: f64, p_drop_modifier: f64) -> Self {
        RandomCommandAgent {
            rng: SplitMix64::new(seed),
            p_wait,
            p_drop_modifier,
            lexicons: None,
            candidates: Vec::new(),
        }
    }

    fn command(&mut self) -> String {
        let Some(lex) = &self.lexicons else { return "look".to_owned() };
        let actions: Vec<&String> = lex.actions.iter().filter(|a| *a != "wait").collect();
        let Some(verb) = self.rng.choose(&actions).map(|v| v.as_str()) else { return "look".to_owned() };
        if matches!(verb, "look" | "inventory") {
            return verb.to_owned();
        }
        let object = self.rng.choose(&lex.objects).cloned().unwrap_or_default();
        let modifier = if self.rng.chance(self.p_drop_modifier) { None } else { self.rng.choose(&lex.modifiers).cloned() };
        match modifier {
            Some(m) => format!("{verb} {m} {object}"),
            None => format!("{verb} {object}"),
        }
    }
}

impl Agent for RandomCommandAgent {
    fn act(&mut self, frame: &ObsFrame) -> Result<AgentMessage, AgentError> {
        if let Some(lex) = &frame.lexicons {
            self.candidates = answer_candidates(frame.qtype, lex);
            self.lexicons = Some(lex.clone());
        }
        if frame.done {
            let token = self.rng.choose(&self.candidates).cloned().unwrap_or_else(|| "no".to_owned());
            return Ok(AgentMessage::answer(token));
        }
        if self.rng.chance(self.p_wait) {
            return Ok(AgentMessage::cmd("wait"));
        }
        Ok(AgentMessage::cmd(self.command()))
    }
}
