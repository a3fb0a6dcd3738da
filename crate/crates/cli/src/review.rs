//! Human review: the queue of runs needing a second look, append-only votes,
//! consensus labels and inter-annotator agreement.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use aetheria_core::clock::SharedClock;
use aetheria_core::jsonl::{self, JsonlError};
use aetheria_core::model::{RuleApplied, RunRecord, RunStatus, Verdict};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const VOTES_FILE: &str = "votes.jsonl";
pub const FLAGS_FILE: &str = "flags.jsonl";

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("reviewer {reviewer} already voted on {review_id}")]
    DuplicateVote { review_id: String, reviewer: String },
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
    #[error(transparent)]
    Storage(#[from] JsonlError),
}

/// One reviewer's judgment on one run. `review_id` is the run id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub review_id: String,
    pub reviewer: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub rationale: String,
    pub cast_at: DateTime<Utc>,
}

/// A run marked for review from outside, e.g. by a model-disagreement import.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flag {
    pub run_id: String,
    #[serde(default)]
    pub reason: String,
    pub flagged_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueReason {
    InvalidOutput,
    Ambiguous,
    Flagged,
}

/// Why `run` belongs in the review queue; empty when it does not.
///
/// Ambiguous means the Arbiter fell through to the default-safety rule or
/// called its own reasoning ambiguous.
pub fn queue_reasons(run: &RunRecord, flagged: bool) -> Vec<QueueReason> {
    let mut reasons = Vec::new();
    if run.status == RunStatus::InvalidOutput {
        reasons.push(QueueReason::InvalidOutput);
    }
    if let Some(report) = &run.report {
        if report.rule_applied == RuleApplied::Rule3DefaultSafe || report.reasoning.to_lowercase().contains("ambiguous") {
            reasons.push(QueueReason::Ambiguous);
        }
    }
    if flagged {
        reasons.push(QueueReason::Flagged);
    }
    reasons
}

/// Majority verdict; `None` (pending) without votes or on a tie.
pub fn consensus<'a>(votes: impl IntoIterator<Item = &'a Vote>) -> Option<Verdict> {
    let (mut safe, mut unsafe_) = (0usize, 0usize);
    for v in votes {
        match v.verdict {
            Verdict::Safe => safe += 1,
            Verdict::Unsafe => unsafe_ += 1,
        }
    }
    match safe.cmp(&unsafe_) {
        std::cmp::Ordering::Greater => Some(Verdict::Safe),
        std::cmp::Ordering::Less => Some(Verdict::Unsafe),
        std::cmp::Ordering::Equal => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreement {
    pub reviewer_a: String,
    pub reviewer_b: String,
    pub co_voted: usize,
    pub agreements: usize,
    /// `agreements / co_voted`; `None` without co-voted items.
    pub agreement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaaReport {
    pub reviewers: Vec<String>,
    pub pairs: Vec<PairAgreement>,
    /// Pooled over all pairs: total agreements / total co-voted items.
    pub overall: Option<f64>,
}

/// Pairwise agreement over items both reviewers voted on.
pub fn iaa(votes: &[Vote]) -> IaaReport {
    let mut by_reviewer: BTreeMap<&str, HashMap<&str, Verdict>> = BTreeMap::new();
    for v in votes {
        by_reviewer.entry(&v.reviewer).or_default().insert(&v.review_id, v.verdict);
    }
    let reviewers: Vec<&str> = by_reviewer.keys().copied().collect();
    let mut pairs = Vec::new();
    let (mut total_agree, mut total_co) = (0usize, 0usize);
    for (i, a) in reviewers.iter().enumerate() {
        for b in &reviewers[i + 1..] {
            let (va, vb) = (&by_reviewer[a], &by_reviewer[b]);
            let mut co_voted = 0;
            let mut agreements = 0;
            for (item, verdict) in va {
                if let Some(other) = vb.get(item) {
                    co_voted += 1;
                    agreements += usize::from(verdict == other);
                }
            }
            total_agree += agreements;
            total_co += co_voted;
            pairs.push(PairAgreement {
                reviewer_a: a.to_string(),
                reviewer_b: b.to_string(),
                co_voted,
                agreements,
                agreement: (co_voted > 0).then(|| agreements as f64 / co_voted as f64),
            });
        }
    }
    IaaReport {
        reviewers: reviewers.iter().map(|r| r.to_string()).collect(),
        pairs,
        overall: (total_co > 0).then(|| total_agree as f64 / total_co as f64),
    }
}

struct State {
    votes: Vec<Vote>,
    flags: Vec<Flag>,
    votes_file: File,
    flags_file: File,
}

/// Votes and flags under one directory. Writes are serialized.
pub struct ReviewStore {
    dir: PathBuf,
    clock: SharedClock,
    state: Mutex<State>,
}

impl std::fmt::Debug for ReviewStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReviewStore").field("dir", &self.dir).finish_non_exhaustive()
    }
}

fn append_line<T: Serialize>(file: &mut File, path: &Path, value: &T) -> Result<(), ReviewError> {
    let line = jsonl::to_line(value)?;
    file.write_all(&line)
        .and_then(|_| file.flush())
        .map_err(|e| JsonlError::Io { path: path.to_path_buf(), source: e })?;
    Ok(())
}

impl ReviewStore {
    pub fn open(dir: impl AsRef<Path>, clock: SharedClock) -> Result<Self, ReviewError> {
        let dir = dir.as_ref().to_path_buf();
        let votes_path = dir.join(VOTES_FILE);
        let flags_path = dir.join(FLAGS_FILE);
        let votes = jsonl::load::<Vote>(&votes_path)?.records.into_iter().map(|(_, _, v)| v).collect();
        let flags = jsonl::load::<Flag>(&flags_path)?.records.into_iter().map(|(_, _, f)| f).collect();
        let state = State {
            votes,
            flags,
            votes_file: jsonl::open_append(&votes_path)?,
            flags_file: jsonl::open_append(&flags_path)?,
        };
        Ok(ReviewStore { dir, clock, state: Mutex::new(state) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Records one vote; a reviewer votes at most once per item.
    pub fn cast(&self, review_id: &str, reviewer: &str, verdict: Verdict, rationale: &str) -> Result<Vote, ReviewError> {
        let reviewer = reviewer.trim();
        if reviewer.is_empty() {
            return Err(ReviewError::Invalid { field: "reviewer", message: "must not be empty".into() });
        }
        let mut state = self.state.lock().unwrap();
        if state.votes.iter().any(|v| v.review_id == review_id && v.reviewer == reviewer) {
            return Err(ReviewError::DuplicateVote { review_id: review_id.into(), reviewer: reviewer.into() });
        }
        let vote = Vote {
            review_id: review_id.into(),
            reviewer: reviewer.into(),
            verdict,
            rationale: rationale.trim().into(),
            cast_at: self.clock.now(),
        };
        let path = self.dir.join(VOTES_FILE);
        append_line(&mut state.votes_file, &path, &vote)?;
        state.votes.push(vote.clone());
        Ok(vote)
    }

    pub fn votes(&self) -> Vec<Vote> {
        self.state.lock().unwrap().votes.clone()
    }

    pub fn votes_for(&self, review_id: &str) -> Vec<Vote> {
        self.state.lock().unwrap().votes.iter().filter(|v| v.review_id == review_id).cloned().collect()
    }

    /// Adds flags for runs not already flagged; returns how many were new.
    pub fn flag(&self, entries: &[(String, String)]) -> Result<usize, ReviewError> {
        let mut state = self.state.lock().unwrap();
        let path = self.dir.join(FLAGS_FILE);
        let mut added = 0;
        for (run_id, reason) in entries {
            if run_id.trim().is_empty() {
                return Err(ReviewError::Invalid { field: "run_id", message: "must not be empty".into() });
            }
            if state.flags.iter().any(|f| &f.run_id == run_id) {
                continue;
            }
            let flag = Flag { run_id: run_id.clone(), reason: reason.clone(), flagged_at: self.clock.now() };
            append_line(&mut state.flags_file, &path, &flag)?;
            state.flags.push(flag);
            added += 1;
        }
        Ok(added)
    }

    pub fn flagged(&self) -> BTreeSet<String> {
        self.state.lock().unwrap().flags.iter().map(|f| f.run_id.clone()).collect()
    }

    pub fn iaa(&self) -> IaaReport {
        iaa(&self.state.lock().unwrap().votes)
    }
}
