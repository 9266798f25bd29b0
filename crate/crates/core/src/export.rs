//! Static {document, question, answer} triplets built from explorer runs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::ExplorerAgent;
use crate::episode::{EpisodeConfig, EpisodeRecord, Mode};
use crate::error::EpisodeError;
use crate::gen::Difficulty;
use crate::question::QuestionType;
use crate::reward::contains_phrase;
use crate::rng::derive_seed;
use crate::runner::{run_episode, RunOptions};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub doc: String,
    pub question: String,
    pub answer: String,
    pub seed: u64,
    pub qtype: QuestionType,
}

/// The trajectory text: every (observation, feedback) pair, newline-joined.
pub fn document(record: &EpisodeRecord) -> String {
    std::iter::once(&record.initial)
        .chain(record.steps.iter().map(|s| &s.outcome))
        .map(|o| o.joined())
        .collect::<Vec<_>>()
        .join("\n")
}

fn explore(difficulty: Difficulty, qtype: QuestionType, seed: u64) -> Result<EpisodeRecord, EpisodeError> {
    let cfg = EpisodeConfig::new(difficulty, qtype, seed, Mode::Test);
    run_episode(&cfg, &mut ExplorerAgent::new(), RunOptions::default())
}

/// Runs the explorer on one game. Returns `None` when it does not reach
/// sufficient information within the step budget.
pub fn export_triplet(difficulty: Difficulty, qtype: QuestionType, seed: u64) -> Result<Option<Triplet>, EpisodeError> {
    let record = explore(difficulty, qtype, seed)?;
    if record.sufficient_info.base < 1.0 {
        tracing::info!(seed, %qtype, "explorer did not reach sufficient information; skipping");
        return Ok(None);
    }
    Ok(Some(Triplet {
        doc: document(&record),
        question: record.question.text.clone(),
        answer: record.question.answer.clone(),
        seed,
        qtype,
    }))
}

/// Re-checks a triplet: the explorer trajectory regenerates the same document,
/// its sufficiency is 1, and location and positive existence documents
/// literally contain the subject.
pub fn verify_triplet(t: &Triplet, difficulty: Difficulty) -> Result<bool, EpisodeError> {
    let record = explore(difficulty, t.qtype, t.seed)?;
    let q = &record.question;
    let mentions = match (t.qtype, t.answer.as_str()) {
        // the inventory is rendered as "You are carrying: ..."
        (QuestionType::Location, "inventory") => {
            t.doc.lines().any(|l| l.starts_with("You are carrying:") && contains_phrase(l, &q.subject))
        }
        (QuestionType::Location, _) => contains_phrase(&t.doc, &q.subject) && contains_phrase(&t.doc, &t.answer),
        (QuestionType::Existence, "yes") => contains_phrase(&t.doc, &q.subject),
        _ => true,
    };
    Ok(document(&record) == t.doc
        && q.text == t.question
        && q.answer == t.answer
        && record.sufficient_info.base >= 1.0
        && mentions)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportConfig {
    pub difficulty: Difficulty,
    /// Question types, cycled over candidate games.
    pub qtypes: Vec<QuestionType>,
    pub count: usize,
    pub master_seed: u64,
    /// Train and validation fractions; the test split takes the rest.
    pub ratios: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExportConfig,
    pub counts: SplitCounts,
    pub files: Vec<String>,
    /// Candidate seeds the explorer could not solve.
    pub skipped_seeds: Vec<u64>,
}

/// Collects exactly `count` triplets from the seed stream `derive_seed(master, "export", i)`.
pub fn collect_triplets(cfg: &ExportConfig) -> Result<(Vec<Triplet>, Vec<u64>), EpisodeError> {
    if cfg.qtypes.is_empty() {
        return Err(EpisodeError::InvalidConfig("no question types to export".into()));
    }
    let mut triplets = Vec::with_capacity(cfg.count);
    let mut skipped = Vec::new();
    let mut next = 0u64;
    while triplets.len() < cfg.count {
        let want = cfg.count - triplets.len();
        let chunk: Vec<u64> = (next..next + (want as u64 * 5 / 4 + 8)).collect();
        next += chunk.len() as u64;
        let results = chunk
            .par_iter()
            .map(|&i| {
                let qtype = cfg.qtypes[(i % cfg.qtypes.len() as u64) as usize];
                let seed = derive_seed(cfg.master_seed, "export", i);
                export_triplet(cfg.difficulty, qtype, seed).map(|t| (seed, t))
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (seed, t) in results {
            match t {
                Some(t) if triplets.len() < cfg.count => triplets.push(t),
                Some(_) => {}
                None => skipped.push(seed),
            }
        }
    }
    Ok((triplets, skipped))
}

pub fn split_counts(n: usize, ratios: (f64, f64)) -> SplitCounts {
    let train = (n as f64 * ratios.0).floor() as usize;
    let valid = ((n as f64 * ratios.1).floor() as usize).min(n - train);
    SplitCounts { train, valid, test: n - train - valid }
}

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid split ratios {0:?}")]
    Ratios((f64, f64)),
}

/// Writes `train.jsonl`, `valid.jsonl`, `test.jsonl` and `manifest.json`.
pub fn export_dataset(cfg: &ExportConfig, out: &Path) -> Result<Manifest, ExportError> {
    let (a, b) = cfg.ratios;
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a + b > 1.0 + 1e-12 {
        return Err(ExportError::Ratios(cfg.ratios));
    }
    let (triplets, skipped_seeds) = collect_triplets(cfg)?;
    let counts = split_counts(triplets.len(), cfg.ratios);
    let io = |path: &Path| {
        let path = path.to_owned();
        move |source| ExportError::Io { path, source }
    };
    fs::create_dir_all(out).map_err(io(out))?;
    let bounds = [("train.jsonl", 0, counts.train), ("valid.jsonl", counts.train, counts.train + counts.valid), ("test.jsonl", counts.train + counts.valid, triplets.len())];
    let mut files = Vec::new();
    for (name, lo, hi) in bounds {
        let path = out.join(name);
        let mut f = fs::File::create(&path).map_err(io(&path))?;
        for t in &triplets[lo..hi] {
            writeln!(f, "{}", serde_json::to_string(t).expect("triplets serialize")).map_err(io(&path))?;
        }
        files.push(name.to_owned());
    }
    let manifest = Manifest { config: cfg.clone(), counts, files, skipped_seeds };
    let path = out.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes")).map_err(io(&path))?;
    Ok(manifest)
}
