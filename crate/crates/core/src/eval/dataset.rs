use std::collections::HashSet;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{ContentItem, Violation};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: item {id}: {violation}")]
    Invalid { line: usize, id: String, violation: Violation },
    #[error("line {line}: duplicate item id {id}")]
    DuplicateId { line: usize, id: String },
    #[error("item {0} has no label; evaluation needs labeled data")]
    Unlabeled(String),
}

/// Parses and validates a JSON Lines dataset. Blank lines are ignored.
pub fn parse_dataset(text: &str) -> Result<Vec<ContentItem>, DatasetError> {
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let item: ContentItem =
            serde_json::from_str(line).map_err(|e| DatasetError::Parse { line: line_no, message: e.to_string() })?;
        item.validate().map_err(|violation| DatasetError::Invalid { line: line_no, id: item.id.clone(), violation })?;
        if !seen.insert(item.id.clone()) {
            return Err(DatasetError::DuplicateId { line: line_no, id: item.id });
        }
        items.push(item);
    }
    Ok(items)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<ContentItem>, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    parse_dataset(&text)
}

pub fn require_labels(items: &[ContentItem]) -> Result<(), DatasetError> {
    match items.iter().find(|i| i.label.is_none()) {
        Some(item) => Err(DatasetError::Unlabeled(item.id.clone())),
        None => Ok(()),
    }
}
