//! One episode: generate, step until `wait` or the step budget, then answer.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::command::{apply, parse, render_observation, valid_commands, Effect, Feedback};
use crate::error::EpisodeError;
use crate::gen::{generate_world, Difficulty, GenConfig};
use crate::question::{make_question, question_seed, Question, QuestionType};
use crate::reward::{contains_phrase, sufficient_info, AttributeEvidence, CoverageTracker, EpisodicCounter, Sufficiency};
use crate::templates::Catalog;
use crate::world::World;

pub const DEFAULT_MAX_STEPS: u32 = 80;
pub const RECORD_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Test,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Train => "train",
            Mode::Test => "test",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Mode::Train),
            "test" => Ok(Mode::Test),
            _ => Err(format!("unknown mode '{s}' (expected train or test)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub gen: GenConfig,
    pub qtype: QuestionType,
    #[serde(default)]
    pub question_index: u64,
    pub mode: Mode,
    pub max_steps: u32,
}

impl EpisodeConfig {
    /// Attribute questions need made-up names, so they are switched on for that type.
    pub fn new(difficulty: Difficulty, qtype: QuestionType, seed: u64, mode: Mode) -> Self {
        Self {
            gen: GenConfig::new(difficulty, seed).with_made_up_names(qtype == QuestionType::Attribute),
            qtype,
            question_index: 0,
            mode,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn with_max_steps(mut self, max_steps: u32) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn seed(&self) -> u64 {
        self.gen.seed
    }
}

/// Fields only sent in training mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainInfo {
    pub valid_commands: Vec<String>,
    pub episodic_bonus: f64,
    /// Present on the final step only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sufficient_info: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub step: u32,
    pub observation: String,
    pub feedback: String,
    pub done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_only: Option<TrainInfo>,
}

impl StepOutcome {
    /// The observation and feedback joined the way the oracle reads them.
    pub fn joined(&self) -> String {
        if self.feedback.is_empty() {
            self.observation.clone()
        } else {
            format!("{}\n{}", self.observation, self.feedback)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedStep {
    pub command: String,
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub version: u32,
    pub config: EpisodeConfig,
    pub question: Question,
    pub initial: StepOutcome,
    pub steps: Vec<RecordedStep>,
    pub answer: Option<String>,
    pub answer_correct: bool,
    pub sufficient_info: Sufficiency,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<AttributeEvidence>,
    /// Why the episode ended without a regular answer, if it did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
    pub duration_ms: u64,
}

/// Equality over everything but wall-clock duration.
impl PartialEq for EpisodeRecord {
    fn eq(&self, other: &Self) -> bool {
        self.version == other.version
            && self.config == other.config
            && self.question == other.question
            && self.initial == other.initial
            && self.steps == other.steps
            && self.answer == other.answer
            && self.answer_correct == other.answer_correct
            && self.sufficient_info.base.to_bits() == other.sufficient_info.base.to_bits()
            && self.sufficient_info.total.to_bits() == other.sufficient_info.total.to_bits()
            && self.evidence == other.evidence
            && self.aborted == other.aborted
    }
}

impl EpisodeRecord {
    pub fn final_outcome(&self) -> &StepOutcome {
        self.steps.last().map(|s| &s.outcome).unwrap_or(&self.initial)
    }

    pub fn commands(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().map(|s| s.command.as_str())
    }
}

pub struct Episode {
    config: EpisodeConfig,
    world: World,
    question: Question,
    counter: EpisodicCounter,
    coverage: CoverageTracker,
    evidence: Option<AttributeEvidence>,
    subject_seen: bool,
    initial: StepOutcome,
    steps: Vec<RecordedStep>,
    /// Joined text of the outcome the agent saw when it decided to stop.
    final_obs: Option<String>,
    sufficiency: Option<Sufficiency>,
    answered: bool,
    started: Instant,
}

impl Episode {
    pub fn start(config: EpisodeConfig) -> Result<(Episode, StepOutcome), EpisodeError> {
        if config.max_steps == 0 {
            return Err(EpisodeError::InvalidConfig("max_steps must be at least 1".into()));
        }
        let world = generate_world(&config.gen)?;
        let question = make_question(&world, config.qtype, question_seed(config.gen.seed, config.question_index))?;
        Self::start_with(config, world, question)
    }

    /// Starts an episode on a hand-built world and question. Such episodes
    /// cannot be replayed from their config alone.
    pub fn start_with(config: EpisodeConfig, world: World, question: Question) -> Result<(Episode, StepOutcome), EpisodeError> {
        if config.max_steps == 0 {
            return Err(EpisodeError::InvalidConfig("max_steps must be at least 1".into()));
        }
        let evidence = match (question.attribute, question.subject_entity) {
            (Some(attr), Some(id)) => Some(AttributeEvidence::new(attr, id)),
            _ => None,
        };
        let coverage = CoverageTracker::new(&world);
        let mut ep = Episode {
            config,
            world,
            question,
            counter: EpisodicCounter::default(),
            coverage,
            evidence,
            subject_seen: false,
            initial: StepOutcome { step: 0, observation: String::new(), feedback: String::new(), done: false, train_only: None },
            steps: Vec::new(),
            final_obs: None,
            sufficiency: None,
            answered: false,
            started: Instant::now(),
        };
        if let Some(ev) = ep.evidence.as_mut() {
            ev.update_state(0, &ep.world);
        }
        let observation = render_observation(&ep.world);
        let outcome = ep.finish_outcome(0, observation, String::new(), false);
        ep.initial = outcome.clone();
        Ok((ep, outcome))
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    pub fn question(&self) -> &Question {
        &self.question
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn step_index(&self) -> u32 {
        self.steps.len() as u32
    }

    pub fn is_done(&self) -> bool {
        self.final_obs.is_some()
    }

    pub fn is_answered(&self) -> bool {
        self.answered
    }

    pub fn last_outcome(&self) -> &StepOutcome {
        self.steps.last().map(|s| &s.outcome).unwrap_or(&self.initial)
    }

    pub fn step(&mut self, raw: &str) -> Result<StepOutcome, EpisodeError> {
        if self.is_done() {
            return Err(EpisodeError::AlreadyDone);
        }
        let index = self.step_index() + 1;
        let before_stop = self.last_outcome().joined();
        let feedback = match parse(raw) {
            Ok(cmd) => {
                let before = self.evidence.as_ref().map(|_| self.world.clone());
                let fb = apply(&mut self.world, &cmd);
                if let (Some(ev), Some(before)) = (self.evidence.as_mut(), before.as_ref()) {
                    ev.update_command(index, before, &cmd, &fb);
                }
                fb
            }
            Err(e) => Feedback::fail(e.feedback(Catalog::standard())),
        };
        self.coverage.update(&self.world);
        if let Some(ev) = self.evidence.as_mut() {
            ev.update_state(index, &self.world);
        }
        let observation = render_observation(&self.world);
        let waited = feedback.effect == Effect::Waited;
        let done = waited || index >= self.config.max_steps;
        let outcome = self.finish_outcome(index, observation, feedback.text, done);
        if done {
            let final_obs = if waited { before_stop } else { outcome.joined() };
            self.final_obs = Some(final_obs);
        }
        let mut outcome = outcome;
        if done {
            let s = self.compute_sufficiency();
            if let Some(t) = outcome.train_only.as_mut() {
                t.sufficient_info = Some(s.total);
            }
        }
        self.steps.push(RecordedStep { command: raw.to_owned(), outcome: outcome.clone() });
        Ok(outcome)
    }

    fn finish_outcome(&mut self, step: u32, observation: String, feedback: String, done: bool) -> StepOutcome {
        let bonus = self.counter.observe(&observation);
        if !self.subject_seen && self.evidence.is_some() {
            let subject = &self.question.subject;
            self.subject_seen = contains_phrase(&observation, subject) || contains_phrase(&feedback, subject);
        }
        let train_only = (self.config.mode == Mode::Train).then(|| TrainInfo {
            valid_commands: valid_commands(&self.world),
            episodic_bonus: bonus,
            sufficient_info: None,
        });
        StepOutcome { step, observation, feedback, done, train_only }
    }

    fn compute_sufficiency(&mut self) -> Sufficiency {
        if let Some(s) = self.sufficiency {
            return s;
        }
        let final_obs = self.final_obs.clone().unwrap_or_else(|| self.last_outcome().joined());
        let s = sufficient_info(&self.question, &final_obs, &self.coverage, self.evidence.as_ref(), self.subject_seen);
        self.sufficiency = Some(s);
        s
    }

    /// Scores the answer. Matching is case-insensitive; an empty token is wrong.
    pub fn answer(&mut self, token: &str) -> Result<EpisodeRecord, EpisodeError> {
        if self.answered {
            return Err(EpisodeError::AlreadyAnswered);
        }
        if !self.is_done() {
            return Err(EpisodeError::NotDone);
        }
        self.answered = true;
        let token = token.trim();
        let correct = !token.is_empty() && token.eq_ignore_ascii_case(&self.question.answer);
        Ok(self.record(Some(token.to_owned()), correct, None))
    }

    /// Ends the episode without an answer; it is scored incorrect and flagged.
    pub fn abort(&mut self, reason: &str) -> EpisodeRecord {
        self.answered = true;
        self.record(None, false, Some(reason.to_owned()))
    }

    fn record(&mut self, answer: Option<String>, correct: bool, aborted: Option<String>) -> EpisodeRecord {
        let sufficient_info = self.compute_sufficiency();
        EpisodeRecord {
            version: RECORD_VERSION,
            config: self.config.clone(),
            question: self.question.clone(),
            initial: self.initial.clone(),
            steps: self.steps.clone(),
            answer,
            answer_correct: correct,
            sufficient_info,
            evidence: self.evidence.clone(),
            aborted,
            duration_ms: self.started.elapsed().as_millis() as u64,
        }
    }

    pub fn coverage(&self) -> &CoverageTracker {
        &self.coverage
    }

    pub fn evidence(&self) -> Option<&AttributeEvidence> {
        self.evidence.as_ref()
    }
}

/// Re-runs a record's commands against a freshly generated world.
pub fn replay(record: &EpisodeRecord) -> Result<EpisodeRecord, EpisodeError> {
    let (mut ep, _) = Episode::start(record.config.clone())?;
    for cmd in record.commands() {
        ep.step(cmd)?;
    }
    let mut out = match (&record.aborted, &record.answer) {
        (Some(reason), _) => ep.abort(reason),
        (None, Some(token)) => ep.answer(token)?,
        (None, None) => ep.abort("unanswered"),
    };
    out.duration_ms = record.duration_ms;
    Ok(out)
}
