//! Evaluation suites and scoring.
//!
//! Game seeds come from `derive_seed(master_seed, tag, index)` with the tags
//! `"training"`, `"zero-shot"` and `"unlimited"`. Training sets are prefixes of
//! one stream, so smaller sets are nested in larger ones.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::episode::{EpisodeConfig, EpisodeRecord, Mode};
use crate::error::EpisodeError;
use crate::gen::Difficulty;
use crate::protocol::Agent;
use crate::question::QuestionType;
use crate::rng::derive_seed;
use crate::runner::{run_episode, RunOptions};

pub const ZERO_SHOT_GAMES: usize = 500;
pub const TRAINING_SET_SIZES: [usize; 5] = [1, 2, 10, 100, 500];
pub const ACCURACY_WINDOW: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Setting {
    /// A fixed pool of games; each episode draws a fresh question from one of them.
    TrainingGames { games: usize, episodes: usize },
    /// A fresh game for every episode.
    Unlimited { episodes: usize },
    /// Held-out games, one question each.
    ZeroShot,
}

impl Setting {
    pub fn mode(self) -> Mode {
        match self {
            Setting::ZeroShot => Mode::Test,
            _ => Mode::Train,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Setting::TrainingGames { .. } => "training",
            Setting::Unlimited { .. } => "unlimited",
            Setting::ZeroShot => "zero-shot",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::TrainingGames { games, episodes } => write!(f, "training-{games} ({episodes} episodes)"),
            Setting::Unlimited { episodes } => write!(f, "unlimited ({episodes} episodes)"),
            Setting::ZeroShot => f.write_str("zero-shot"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SettingKind {
    Training,
    Unlimited,
    ZeroShot,
}

impl FromStr for SettingKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "training" => Ok(SettingKind::Training),
            "unlimited" => Ok(SettingKind::Unlimited),
            "zero-shot" | "zero_shot" => Ok(SettingKind::ZeroShot),
            _ => Err(format!("unknown setting '{s}' (expected training, unlimited or zero-shot)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSuite {
    pub setting: Setting,
    pub difficulty: Difficulty,
    pub qtype: QuestionType,
    pub master_seed: u64,
    /// The game pool (training, zero-shot) or the drawn stream (unlimited).
    pub seeds: Vec<u64>,
}

fn training_seeds(master: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| derive_seed(master, "training", i)).collect()
}

/// Seeds from a tagged stream, skipping any in `exclude`.
fn stream(master: u64, tag: &str, n: usize, exclude: &BTreeSet<u64>) -> Vec<u64> {
    (0u64..).map(|i| derive_seed(master, tag, i)).filter(|s| !exclude.contains(s)).take(n).collect()
}

pub fn build_suite(setting: Setting, difficulty: Difficulty, qtype: QuestionType, master_seed: u64) -> Result<EvalSuite, EpisodeError> {
    let largest_pool: BTreeSet<u64> = training_seeds(master_seed, *TRAINING_SET_SIZES.last().unwrap()).into_iter().collect();
    let seeds = match setting {
        Setting::TrainingGames { games, episodes } => {
            if games == 0 || episodes == 0 {
                return Err(EpisodeError::InvalidConfig("training suites need at least one game and one episode".into()));
            }
            training_seeds(master_seed, games)
        }
        Setting::ZeroShot => stream(master_seed, "zero-shot", ZERO_SHOT_GAMES, &largest_pool),
        Setting::Unlimited { episodes } => {
            let mut exclude = largest_pool;
            exclude.extend(stream(master_seed, "zero-shot", ZERO_SHOT_GAMES, &exclude.clone()));
            stream(master_seed, "unlimited", episodes, &exclude)
        }
    };
    Ok(EvalSuite { setting, difficulty, qtype, master_seed, seeds })
}

impl EvalSuite {
    /// One config per episode, in order.
    pub fn configs(&self) -> Vec<EpisodeConfig> {
        let mode = self.setting.mode();
        let make = |seed: u64, question_index: u64| {
            let mut c = EpisodeConfig::new(self.difficulty, self.qtype, seed, mode);
            c.question_index = question_index;
            c
        };
        match self.setting {
            Setting::TrainingGames { episodes, .. } => {
                let n = self.seeds.len();
                (0..episodes).map(|i| make(self.seeds[i % n], (i / n) as u64)).collect()
            }
            _ => self.seeds.iter().map(|&s| make(s, 0)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub seed: u64,
    pub question_index: u64,
    pub question: String,
    pub answer: Option<String>,
    pub ground_truth: String,
    pub correct: bool,
    pub sufficient_info: f64,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub mean_sufficient_info: f64,
    pub failures: usize,
    /// Trailing average of correctness over the last `ACCURACY_WINDOW` episodes.
    pub windowed_accuracy: Vec<f64>,
    pub results: Vec<QuestionResult>,
}

/// Scores records; a pure function, so persisted records re-score identically.
pub fn score(records: &[EpisodeRecord]) -> ScoreReport {
    let results: Vec<QuestionResult> = records
        .iter()
        .map(|r| QuestionResult {
            seed: r.config.seed(),
            question_index: r.config.question_index,
            question: r.question.text.clone(),
            answer: r.answer.clone(),
            ground_truth: r.question.answer.clone(),
            correct: r.answer_correct,
            sufficient_info: r.sufficient_info.total,
            steps: r.steps.len(),
            failure: r.aborted.clone(),
        })
        .collect();
    let total = results.len();
    let correct = results.iter().filter(|r| r.correct).count();
    let ratio = |a: f64, n: usize| if n == 0 { 0.0 } else { a / n as f64 };
    let mut windowed_accuracy = Vec::with_capacity(total);
    let mut in_window = 0usize;
    for (i, r) in results.iter().enumerate() {
        in_window += r.correct as usize;
        if i >= ACCURACY_WINDOW {
            in_window -= results[i - ACCURACY_WINDOW].correct as usize;
        }
        windowed_accuracy.push(in_window as f64 / (i + 1).min(ACCURACY_WINDOW) as f64);
    }
    ScoreReport {
        total,
        correct,
        accuracy: ratio(correct as f64, total),
        mean_sufficient_info: ratio(results.iter().map(|r| r.sufficient_info).sum(), total),
        failures: results.iter().filter(|r| r.failure.is_some()).count(),
        windowed_accuracy,
        results,
    }
}

impl ScoreReport {
    pub fn table(&self, title: &str) -> String {
        let mut out = format!("{title}\n");
        out.push_str(&format!("  episodes            {}\n", self.total));
        out.push_str(&format!("  correct             {}\n", self.correct));
        out.push_str(&format!("  accuracy            {:.3}\n", self.accuracy));
        out.push_str(&format!("  mean sufficiency    {:.3}\n", self.mean_sufficient_info));
        out.push_str(&format!("  failures            {}\n", self.failures));
        if let Some(last) = self.windowed_accuracy.last() {
            out.push_str(&format!("  final window acc.   {last:.3}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    pub step_timeout: Option<Duration>,
}


/// Runs every episode of the suite and scores it. Agent failures are scored
/// incorrect and counted in `failures`.
pub fn evaluate<F>(suite: &EvalSuite, make_agent: F, opts: EvalOptions) -> Result<(ScoreReport, Vec<EpisodeRecord>), EpisodeError>
where
    F: Fn(&EpisodeConfig) -> Box<dyn Agent> + Sync,
{
    let configs = suite.configs();
    let run = || {
        configs
            .par_iter()
            .map(|c| {
                let mut agent = make_agent(c);
                run_episode(c, agent.as_mut(), RunOptions { step_timeout: opts.step_timeout })
            })
            .collect::<Result<Vec<_>, _>>()
    };
    let records = if opts.workers == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| EpisodeError::InvalidConfig(format!("cannot start workers: {e}")))?
            .install(run)?
    };
    Ok((score(&records), records))
}
