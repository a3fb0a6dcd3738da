//! JSON Lines files with line-granular crash recovery.
//!
//! On load, a final line without its terminating newline that does not parse
//! is treated as a torn write: its bytes are moved to `<file>.quarantine` and
//! the file is truncated back to the last complete record.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("{}: line {line}: {message}", path.display())]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialize: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl JsonlError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        JsonlError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug)]
pub struct Loaded<T> {
    /// Records with the byte offset and length of their line.
    pub records: Vec<(u64, u64, T)>,
    pub quarantined: Option<PathBuf>,
    /// File length after recovery.
    pub len: u64,
}

pub fn quarantine_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".quarantine");
    path.with_file_name(name)
}

/// Reads every record in `path`. A missing file loads as empty.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<Loaded<T>, JsonlError> {
    let mut bytes = Vec::new();
    match File::open(path) {
        Ok(mut f) => {
            f.read_to_end(&mut bytes).map_err(|e| JsonlError::io(path, e))?;
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Ok(Loaded { records: Vec::new(), quarantined: None, len: 0 });
        }
        Err(e) => return Err(JsonlError::io(path, e)),
    }

    let mut records = Vec::new();
    let mut offset = 0usize;
    let mut line_no = 0usize;
    while offset < bytes.len() {
        line_no += 1;
        let rest = &bytes[offset..];
        match rest.iter().position(|b| *b == b'\n') {
            Some(end) => {
                let line = &rest[..end];
                if !line.iter().all(u8::is_ascii_whitespace) {
                    let record = serde_json::from_slice(line).map_err(|e| JsonlError::Corrupt {
                        path: path.to_path_buf(),
                        line: line_no,
                        message: e.to_string(),
                    })?;
                    records.push((offset as u64, end as u64, record));
                }
                offset += end + 1;
            }
            None => {
                if let Ok(record) = serde_json::from_slice::<T>(rest) {
                    // Complete record that only lost its newline; repair in place.
                    let mut f = OpenOptions::new().append(true).open(path).map_err(|e| JsonlError::io(path, e))?;
                    f.write_all(b"\n").map_err(|e| JsonlError::io(path, e))?;
                    records.push((offset as u64, rest.len() as u64, record));
                    let len = (bytes.len() + 1) as u64;
                    return Ok(Loaded { records, quarantined: None, len });
                }
                let qpath = quarantine_path(path);
                let mut q = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&qpath)
                    .map_err(|e| JsonlError::io(&qpath, e))?;
                q.write_all(rest).map_err(|e| JsonlError::io(&qpath, e))?;
                q.write_all(b"\n").map_err(|e| JsonlError::io(&qpath, e))?;
                let f = OpenOptions::new().write(true).open(path).map_err(|e| JsonlError::io(path, e))?;
                f.set_len(offset as u64).map_err(|e| JsonlError::io(path, e))?;
                tracing::warn!(file = %path.display(), bytes = rest.len(), "quarantined torn final line");
                return Ok(Loaded { records, quarantined: Some(qpath), len: offset as u64 });
            }
        }
    }
    Ok(Loaded { records, quarantined: None, len: bytes.len() as u64 })
}

/// Serializes `value` as one line, newline included.
pub fn to_line<T: Serialize>(value: &T) -> Result<Vec<u8>, JsonlError> {
    let mut line = serde_json::to_vec(value)?;
    line.push(b'\n');
    Ok(line)
}

pub fn open_append(path: &Path) -> Result<File, JsonlError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| JsonlError::io(parent, e))?;
    }
    OpenOptions::new().create(true).append(true).open(path).map_err(|e| JsonlError::io(path, e))
}

/// Writes a whole collection, one record per line.
pub fn write_all<T: Serialize>(path: &Path, values: &[T]) -> Result<(), JsonlError> {
    let mut out = Vec::new();
    for v in values {
        out.extend(to_line(v)?);
    }
    std::fs::write(path, out).map_err(|e| JsonlError::io(path, e))
}
