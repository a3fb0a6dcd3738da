//! Append-only run log, one directory per experiment:
//! `runs/<experiment>/runs.jsonl` and `runs/<experiment>/config.json`.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use thiserror::Error;

use crate::jsonl::{self, JsonlError};
use crate::model::{Outcome, RunRecord, RunStatus};

pub const RUNS_FILE: &str = "runs.jsonl";
pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Error)]
pub enum LogStoreError {
    #[error("duplicate run id {0}")]
    DuplicateRunId(String),
    #[error(transparent)]
    Storage(#[from] JsonlError),
    #[error("config.json: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunFilter {
    pub batch_id: Option<String>,
    pub status: Option<RunStatus>,
    /// Only matches completed runs of labeled items.
    pub outcome: Option<Outcome>,
}

impl RunFilter {
    pub fn matches(&self, run: &RunRecord) -> bool {
        self.batch_id.as_ref().is_none_or(|b| run.batch_id.as_ref() == Some(b))
            && self.status.is_none_or(|s| run.status == s)
            && self.outcome.is_none_or(|o| run.outcome() == Some(o))
    }
}

#[derive(Debug, Default)]
struct Index {
    /// run_id -> (offset, len) of its line.
    offsets: HashMap<String, (u64, u64)>,
    order: Vec<String>,
}

#[derive(Debug)]
pub struct LogStore {
    dir: PathBuf,
    runs_path: PathBuf,
    index: RwLock<Index>,
    writer: Mutex<(File, u64)>,
}

impl LogStore {
    /// Opens or creates the store. A torn final line is quarantined.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, LogStoreError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(|e| JsonlError::io(&dir, e))?;
        let runs_path = dir.join(RUNS_FILE);
        let loaded = jsonl::load::<RunRecord>(&runs_path)?;
        let mut index = Index::default();
        for (offset, len, run) in loaded.records {
            if index.offsets.insert(run.run_id.clone(), (offset, len)).is_some() {
                return Err(LogStoreError::DuplicateRunId(run.run_id));
            }
            index.order.push(run.run_id);
        }
        let file = jsonl::open_append(&runs_path)?;
        Ok(LogStore { dir, runs_path, index: RwLock::new(index), writer: Mutex::new((file, loaded.len)) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn runs_path(&self) -> &Path {
        &self.runs_path
    }

    pub fn len(&self) -> usize {
        self.index.read().unwrap().order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, run_id: &str) -> bool {
        self.index.read().unwrap().offsets.contains_key(run_id)
    }

    /// Durable append; appends from many tasks are serialized.
    pub fn append(&self, run: &RunRecord) -> Result<(), LogStoreError> {
        let line = jsonl::to_line(run)?;
        let mut writer = self.writer.lock().unwrap();
        if self.contains(&run.run_id) {
            return Err(LogStoreError::DuplicateRunId(run.run_id.clone()));
        }
        let (file, end) = &mut *writer;
        file.write_all(&line).map_err(|e| JsonlError::io(&self.runs_path, e))?;
        file.flush().map_err(|e| JsonlError::io(&self.runs_path, e))?;
        let offset = *end;
        *end += line.len() as u64;
        let mut index = self.index.write().unwrap();
        index.offsets.insert(run.run_id.clone(), (offset, line.len() as u64 - 1));
        index.order.push(run.run_id.clone());
        Ok(())
    }

    pub fn get(&self, run_id: &str) -> Result<Option<RunRecord>, LogStoreError> {
        let Some((offset, len)) = self.index.read().unwrap().offsets.get(run_id).copied() else {
            return Ok(None);
        };
        let mut file = File::open(&self.runs_path).map_err(|e| JsonlError::io(&self.runs_path, e))?;
        file.seek(SeekFrom::Start(offset)).map_err(|e| JsonlError::io(&self.runs_path, e))?;
        let mut buf = vec![0; len as usize];
        file.read_exact(&mut buf).map_err(|e| JsonlError::io(&self.runs_path, e))?;
        let run = serde_json::from_slice(&buf).map_err(|e| JsonlError::Corrupt {
            path: self.runs_path.clone(),
            line: 0,
            message: e.to_string(),
        })?;
        Ok(Some(run))
    }

    /// Every record in file order.
    pub fn all(&self) -> Result<Vec<RunRecord>, LogStoreError> {
        let _writer = self.writer.lock().unwrap();
        let loaded = jsonl::load::<RunRecord>(&self.runs_path)?;
        Ok(loaded.records.into_iter().map(|(_, _, r)| r).collect())
    }

    /// Matching records ordered by `finished_at`, file order breaking ties.
    pub fn query(&self, filter: &RunFilter) -> Result<Vec<RunRecord>, LogStoreError> {
        let mut runs: Vec<RunRecord> = self.all()?.into_iter().filter(|r| filter.matches(r)).collect();
        runs.sort_by_key(|r| r.finished_at);
        Ok(runs)
    }

    /// Merges `config` under `fingerprint` into `config.json`.
    pub fn record_config(&self, fingerprint: &str, config: &serde_json::Value) -> Result<(), LogStoreError> {
        let _writer = self.writer.lock().unwrap();
        let path = self.dir.join(CONFIG_FILE);
        let mut map: BTreeMap<String, serde_json::Value> = match std::fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| LogStoreError::Config(e.to_string()))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(JsonlError::io(&path, e).into()),
        };
        map.insert(fingerprint.to_string(), config.clone());
        let mut text = serde_json::to_string_pretty(&map).map_err(JsonlError::from)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| JsonlError::io(&path, e))?;
        Ok(())
    }

    pub fn configs(&self) -> Result<BTreeMap<String, serde_json::Value>, LogStoreError> {
        let path = self.dir.join(CONFIG_FILE);
        match std::fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| LogStoreError::Config(e.to_string())),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeMap::new()),
            Err(e) => Err(JsonlError::io(&path, e).into()),
        }
    }
}
