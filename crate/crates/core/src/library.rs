//! Case library: curated precedents with Top-K similarity retrieval.
//!
//! Records live in one JSON Lines file and an in-memory index rebuilt on
//! open. The default scorer is lexical: stop-word-filtered bag of words,
//! sublinear term weights (`1 + ln tf`), cosine similarity. An [`Embedder`]
//! can replace it behind the same interface.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use thiserror::Error;

use crate::jsonl::{self, JsonlError};
use crate::model::{CaseRecord, ModelError};

pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("case {0} already exists in the library")]
    DuplicateId(String),
    #[error(transparent)]
    Invalid(#[from] ModelError),
    #[error("library storage: {0}")]
    Storage(#[from] JsonlError),
}

/// Dense text embeddings for retrieval.
pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Vec<f32>;
}

const STOP_WORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are", "as",
    "at", "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can",
    "could", "did", "do", "does", "doing", "down", "during", "each", "few", "for", "from", "further",
    "had", "has", "have", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his",
    "how", "i", "if", "in", "into", "is", "it", "its", "itself", "just", "me", "more", "most", "my",
    "myself", "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our",
    "ours", "ourselves", "out", "over", "own", "same", "she", "should", "so", "some", "such", "than",
    "that", "the", "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this",
    "those", "through", "to", "too", "under", "until", "up", "very", "was", "we", "were", "what",
    "when", "where", "which", "while", "who", "whom", "why", "will", "with", "would", "you", "your",
    "yours", "yourself", "yourselves",
];

/// Lowercased alphanumeric tokens with stop words removed.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| STOP_WORDS.binary_search(&t.as_str()).is_err())
        .collect()
}

/// Unit-length sparse vector, sorted by term so dot products sum in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct TermVector(Vec<(String, f64)>);

impl TermVector {
    pub fn from_text(text: &str) -> Self {
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for token in tokenize(text) {
            *counts.entry(token).or_insert(0) += 1;
        }
        let mut terms: Vec<(String, f64)> =
            counts.into_iter().map(|(t, tf)| (t, 1.0 + (tf as f64).ln())).collect();
        let norm = terms.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut terms {
                *w /= norm;
            }
        }
        TermVector(terms)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn cosine(&self, other: &TermVector) -> f64 {
        let (mut i, mut j, mut dot) = (0, 0, 0.0);
        let (a, b) = (&self.0, &other.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        dot.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone)]
enum Vector {
    Lexical(TermVector),
    Dense(Vec<f32>),
}

fn dense_cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
    let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).max(0.0)
    }
}

#[derive(Default)]
struct Index {
    records: Vec<CaseRecord>,
    vectors: Vec<Vector>,
    by_id: HashMap<String, usize>,
}

/// Thread-safe case store. Reads run concurrently; writes are exclusive.
pub struct CaseLibrary {
    path: Option<PathBuf>,
    embedder: Option<Arc<dyn Embedder>>,
    index: RwLock<Index>,
    writer: Mutex<Option<File>>,
    retrievals: AtomicU64,
}

impl std::fmt::Debug for CaseLibrary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CaseLibrary").field("path", &self.path).field("len", &self.len()).finish()
    }
}

impl CaseLibrary {
    /// An empty library that lives only in memory.
    pub fn in_memory() -> Self {
        CaseLibrary {
            path: None,
            embedder: None,
            index: RwLock::new(Index::default()),
            writer: Mutex::new(None),
            retrievals: AtomicU64::new(0),
        }
    }

    /// Opens (or creates) the library file and rebuilds the index.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LibraryError> {
        Self::open_with(path, None)
    }

    pub fn open_with(path: impl AsRef<Path>, embedder: Option<Arc<dyn Embedder>>) -> Result<Self, LibraryError> {
        let path = path.as_ref().to_path_buf();
        let loaded = jsonl::load::<CaseRecord>(&path)?;
        let lib = CaseLibrary {
            path: Some(path.clone()),
            embedder,
            index: RwLock::new(Index::default()),
            writer: Mutex::new(Some(jsonl::open_append(&path)?)),
            retrievals: AtomicU64::new(0),
        };
        {
            let mut index = lib.index.write().unwrap();
            for (_, _, record) in loaded.records {
                if index.by_id.contains_key(&record.case_id) {
                    return Err(LibraryError::DuplicateId(record.case_id));
                }
                let vector = lib.vectorize(&record.indexed_text);
                let pos = index.records.len();
                index.by_id.insert(record.case_id.clone(), pos);
                index.records.push(record);
                index.vectors.push(vector);
            }
        }
        Ok(lib)
    }

    pub fn with_embedder(mut self, embedder: Arc<dyn Embedder>) -> Self {
        let index = self.index.get_mut().unwrap();
        index.vectors = index.records.iter().map(|r| Vector::Dense(embedder.embed(&r.indexed_text))).collect();
        self.embedder = Some(embedder);
        self
    }

    fn vectorize(&self, text: &str) -> Vector {
        match &self.embedder {
            Some(e) => Vector::Dense(e.embed(text)),
            None => Vector::Lexical(TermVector::from_text(text)),
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.index.read().unwrap().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, case_id: &str) -> bool {
        self.index.read().unwrap().by_id.contains_key(case_id)
    }

    pub fn get(&self, case_id: &str) -> Option<CaseRecord> {
        let index = self.index.read().unwrap();
        index.by_id.get(case_id).map(|i| index.records[*i].clone())
    }

    pub fn records(&self) -> Vec<CaseRecord> {
        self.index.read().unwrap().records.clone()
    }

    /// Number of retrieval queries served, for auditing retrieval I/O.
    pub fn retrieval_count(&self) -> u64 {
        self.retrievals.load(Ordering::Relaxed)
    }

    /// Adds a record. Existing ids are never replaced.
    pub fn index(&self, record: CaseRecord) -> Result<String, LibraryError> {
        record.check()?;
        let vector = self.vectorize(&record.indexed_text);
        let mut index = self.index.write().unwrap();
        if index.by_id.contains_key(&record.case_id) {
            return Err(LibraryError::DuplicateId(record.case_id));
        }
        if let Some(file) = self.writer.lock().unwrap().as_mut() {
            let line = jsonl::to_line(&record)?;
            let path = self.path.as_deref().unwrap_or(Path::new(""));
            file.write_all(&line).map_err(|e| JsonlError::io(path, e))?;
            file.flush().map_err(|e| JsonlError::io(path, e))?;
        }
        let id = record.case_id.clone();
        let pos = index.records.len();
        index.by_id.insert(id.clone(), pos);
        index.records.push(record);
        index.vectors.push(vector);
        Ok(id)
    }

    /// At most `k` records by non-increasing similarity; ties break by case id.
    pub fn retrieve_top_k(&self, query_text: &str, k: usize) -> Vec<(CaseRecord, f64)> {
        self.retrievals.fetch_add(1, Ordering::Relaxed);
        let index = self.index.read().unwrap();
        if index.records.is_empty() || k == 0 {
            return Vec::new();
        }
        let query = self.vectorize(query_text);
        let mut scored: Vec<(usize, f64)> = index
            .vectors
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let sim = match (&query, v) {
                    (Vector::Lexical(q), Vector::Lexical(d)) => q.cosine(d),
                    (Vector::Dense(q), Vector::Dense(d)) => dense_cosine(q, d),
                    _ => 0.0,
                };
                (i, sim)
            })
            .collect();
        scored.sort_by(|(ia, sa), (ib, sb)| {
            sb.total_cmp(sa).then_with(|| index.records[*ia].case_id.cmp(&index.records[*ib].case_id))
        });
        scored.truncate(k);
        scored.into_iter().map(|(i, s)| (index.records[i].clone(), s)).collect()
    }
}
