//! Run directories: one JSON document per episode plus an `index.jsonl`
//! listing each record with its seed and score.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::EpisodeRecord;
use crate::gen::Difficulty;
use crate::question::QuestionType;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed record {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("invalid record name '{0}'")]
    BadName(String),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_owned(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub file: String,
    pub seed: u64,
    pub difficulty: Difficulty,
    pub qtype: QuestionType,
    pub question_index: u64,
    pub correct: bool,
    pub sufficient_info: f64,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub aborted: bool,
}

impl IndexEntry {
    pub fn of(file: &str, r: &EpisodeRecord) -> Self {
        IndexEntry {
            file: file.to_owned(),
            seed: r.config.seed(),
            difficulty: r.config.gen.difficulty,
            qtype: r.config.qtype,
            question_index: r.config.question_index,
            correct: r.answer_correct,
            sufficient_info: r.sufficient_info.total,
            steps: r.steps.len(),
            aborted: r.aborted.is_some(),
        }
    }
}

#[derive(Debug)]
pub struct RecordStore {
    dir: PathBuf,
    index_lock: Mutex<()>,
}

impl RecordStore {
    pub const INDEX: &'static str = "index.jsonl";

    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        Ok(RecordStore { dir, index_lock: Mutex::new(()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `<name>.json` and appends its index line. Safe to call from many threads.
    pub fn save(&self, name: &str, record: &EpisodeRecord) -> Result<PathBuf, StoreError> {
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(StoreError::BadName(name.to_owned()));
        }
        let file = format!("{name}.json");
        let path = self.dir.join(&file);
        let body = serde_json::to_string_pretty(record).expect("records serialize");
        fs::write(&path, body).map_err(io(&path))?;

        let index = self.dir.join(Self::INDEX);
        let line = serde_json::to_string(&IndexEntry::of(&file, record)).expect("index entries serialize");
        let _guard = self.index_lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut f = OpenOptions::new().create(true).append(true).open(&index).map_err(io(&index))?;
        writeln!(f, "{line}").map_err(io(&index))?;
        Ok(path)
    }

    pub fn index(&self) -> Result<Vec<IndexEntry>, StoreError> {
        let path = self.dir.join(Self::INDEX);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io(&path)(e)),
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|source| StoreError::Json { path: path.clone(), source }))
            .collect()
    }

    pub fn load(&self, file: &str) -> Result<EpisodeRecord, StoreError> {
        load_record(&self.dir.join(file))
    }
}

pub fn load_record(path: &Path) -> Result<EpisodeRecord, StoreError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|source| StoreError::Json { path: path.to_owned(), source })
}
