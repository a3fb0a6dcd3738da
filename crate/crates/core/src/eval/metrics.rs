//! Precision, recall and F1 with `Risky` as the positive class.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GroundTruthLabel, Modality, Outcome, RunRecord, RunStatus, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no label for item {0}")]
pub struct MissingLabel(pub String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub item_id: String,
    pub status: RunStatus,
    pub verdict: Option<Verdict>,
}

impl From<&RunRecord> for Prediction {
    fn from(run: &RunRecord) -> Self {
        Prediction { item_id: run.item_id.clone(), status: run.status, verdict: run.verdict() }
    }
}

/// `tp + fp + fn + tn = evaluated = total - invalid_excluded`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub evaluated: u64,
    /// Every non-completed prediction, provider errors included.
    pub invalid_excluded: u64,
    /// The provider-error share of `invalid_excluded`.
    pub provider_errors: u64,
}

pub fn precision(tp: u64, fp: u64) -> f64 {
    if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 }
}

pub fn recall(tp: u64, fn_: u64) -> f64 {
    if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 }
}

/// Harmonic mean; 0 when `p + r = 0`.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) }
}

impl MetricsResult {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64, invalid_excluded: u64, provider_errors: u64) -> Self {
        let p = precision(tp, fp);
        let r = recall(tp, fn_);
        MetricsResult {
            precision: p,
            recall: r,
            f1: f1(p, r),
            tp,
            fp,
            fn_,
            tn,
            evaluated: tp + fp + fn_ + tn,
            invalid_excluded,
            provider_errors,
        }
    }
}

#[derive(Default)]
struct Counts {
    cells: [u64; 4],
    invalid: u64,
    provider: u64,
}

impl Counts {
    fn add(&mut self, status: RunStatus, verdict: Option<Verdict>, label: GroundTruthLabel) {
        match (status, verdict) {
            (RunStatus::Completed, Some(v)) => {
                let idx = match Outcome::of(v, label) {
                    Outcome::Tp => 0,
                    Outcome::Fp => 1,
                    Outcome::Fn => 2,
                    Outcome::Tn => 3,
                };
                self.cells[idx] += 1;
            }
            (RunStatus::ProviderError, _) => {
                self.invalid += 1;
                self.provider += 1;
            }
            _ => self.invalid += 1,
        }
    }

    fn finish(&self) -> MetricsResult {
        let [tp, fp, fn_, tn] = self.cells;
        MetricsResult::from_counts(tp, fp, fn_, tn, self.invalid, self.provider)
    }
}

/// Non-completed predictions are excluded from all four confusion counts.
pub fn compute_metrics(
    predictions: &[Prediction],
    labels: &HashMap<String, GroundTruthLabel>,
) -> Result<MetricsResult, MissingLabel> {
    let mut counts = Counts::default();
    for p in predictions {
        let label = labels.get(&p.item_id).ok_or_else(|| MissingLabel(p.item_id.clone()))?;
        counts.add(p.status, p.verdict, *label);
    }
    Ok(counts.finish())
}

/// Uses the labels carried on each run's item.
pub fn metrics_for_runs<'a>(runs: impl IntoIterator<Item = &'a RunRecord>) -> Result<MetricsResult, MissingLabel> {
    let mut counts = Counts::default();
    for run in runs {
        let label = run.label().ok_or_else(|| MissingLabel(run.item_id.clone()))?;
        counts.add(run.status, run.verdict(), label);
    }
    Ok(counts.finish())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub overall: MetricsResult,
    /// Only modalities present in the runs.
    pub by_modality: BTreeMap<Modality, MetricsResult>,
}

pub fn metrics_report(runs: &[RunRecord]) -> Result<MetricsReport, MissingLabel> {
    let overall = metrics_for_runs(runs)?;
    let mut by_modality = BTreeMap::new();
    for m in Modality::ALL {
        let subset: Vec<&RunRecord> = runs.iter().filter(|r| r.modality() == m).collect();
        if !subset.is_empty() {
            by_modality.insert(m, metrics_for_runs(subset)?);
        }
    }
    Ok(MetricsReport { overall, by_modality })
}
