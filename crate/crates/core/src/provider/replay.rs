//! Scripted provider answering `(role, index)` lookups from a JSON Lines file.
//!
//! Each line is `{"role": .., "index": .., "response": .., "tokens_in": .., "tokens_out": ..}`.
//! `index` counts the calls made for that role, starting at 0, across the
//! whole lifetime of the provider.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Provider, ProviderError, ProviderRequest, ProviderResponse};
use crate::model::AgentRole;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("replay script line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("replay script I/O: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayEntry {
    pub role: AgentRole,
    pub index: u32,
    pub response: String,
    #[serde(default)]
    pub tokens_in: u64,
    #[serde(default)]
    pub tokens_out: u64,
}

#[derive(Debug, Default)]
pub struct ReplayProvider {
    entries: HashMap<(AgentRole, u32), ReplayEntry>,
    cursors: Mutex<BTreeMap<AgentRole, u32>>,
}

impl ReplayProvider {
    pub fn from_entries(entries: Vec<ReplayEntry>) -> Result<Self, ReplayError> {
        let mut map = HashMap::with_capacity(entries.len());
        for (i, entry) in entries.into_iter().enumerate() {
            let key = (entry.role, entry.index);
            if map.insert(key, entry).is_some() {
                return Err(ReplayError::Schema {
                    line: i + 1,
                    message: format!("duplicate key ({}, {})", key.0, key.1),
                });
            }
        }
        Ok(ReplayProvider { entries: map, cursors: Mutex::new(BTreeMap::new()) })
    }

    pub fn parse(text: &str) -> Result<Self, ReplayError> {
        let mut entries = Vec::new();
        let mut seen = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let entry: ReplayEntry = serde_json::from_str(line)
                .map_err(|e| ReplayError::Schema { line: line_no, message: e.to_string() })?;
            if let Some(first) = seen.insert((entry.role, entry.index), line_no) {
                return Err(ReplayError::Schema {
                    line: line_no,
                    message: format!(
                        "duplicate key ({}, {}) first defined on line {first}",
                        entry.role, entry.index
                    ),
                });
            }
            entries.push(entry);
        }
        Self::from_entries(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ReplayError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries per role in the script.
    pub fn counts_by_role(&self) -> BTreeMap<AgentRole, usize> {
        let mut counts = BTreeMap::new();
        for (role, _) in self.entries.keys() {
            *counts.entry(*role).or_insert(0) += 1;
        }
        counts
    }

    /// Calls served so far per role.
    pub fn consumed(&self) -> BTreeMap<AgentRole, u32> {
        self.cursors.lock().unwrap().clone()
    }
}

#[async_trait]
impl Provider for ReplayProvider {
    async fn send(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let index = {
            let mut cursors = self.cursors.lock().unwrap();
            let cursor = cursors.entry(request.role).or_insert(0);
            let index = *cursor;
            *cursor += 1;
            index
        };
        let entry = self
            .entries
            .get(&(request.role, index))
            .ok_or(ProviderError::ScriptExhausted { role: request.role, index })?;
        Ok(ProviderResponse {
            text: entry.response.clone(),
            tokens_in: entry.tokens_in,
            tokens_out: entry.tokens_out,
        })
    }

    fn is_positional(&self) -> bool {
        true
    }
}

/// Builds replay scripts with per-role indices assigned in push order.
#[derive(Debug, Default, Clone)]
pub struct ReplayScriptBuilder {
    entries: Vec<ReplayEntry>,
    next: BTreeMap<AgentRole, u32>,
}

impl ReplayScriptBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, role: AgentRole, response: impl Into<String>, tokens_in: u64, tokens_out: u64) -> &mut Self {
        let index = self.next.entry(role).or_insert(0);
        self.entries.push(ReplayEntry {
            role,
            index: *index,
            response: response.into(),
            tokens_in,
            tokens_out,
        });
        *index += 1;
        self
    }

    pub fn entries(&self) -> &[ReplayEntry] {
        &self.entries
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&serde_json::to_string(entry).expect("replay entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_jsonl().as_bytes())?;
        file.sync_all()
    }

    pub fn build(&self) -> ReplayProvider {
        ReplayProvider::from_entries(self.entries.clone()).expect("builder indices are unique")
    }
}
