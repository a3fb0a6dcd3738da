//! Report files (`report.json`, `report.txt`) with published reference
//! targets next to measured values. References are informational only.

use std::path::Path;

use serde::Serialize;

use super::bench::{BenchResult, SweepRow};
use super::sequential::SequentialResult;
use crate::model::{Modality, Tier};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrfReference {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-modality reference scores for the full system.
pub const BENCH_REFERENCE: [(Modality, PrfReference); 3] = [
    (Modality::TextOnly, PrfReference { precision: 0.92, recall: 0.91, f1: 0.92 }),
    (Modality::ImageOnly, PrfReference { precision: 0.90, recall: 0.85, f1: 0.87 }),
    (Modality::TextImage, PrfReference { precision: 0.83, recall: 0.85, f1: 0.84 }),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundsReference {
    pub n_rounds: u32,
    pub scores: PrfReference,
    pub cost_increase_pct: Option<f64>,
}

pub const ROUNDS_REFERENCE: [RoundsReference; 3] = [
    RoundsReference { n_rounds: 1, scores: PrfReference { precision: 0.820, recall: 0.882, f1: 0.8501 }, cost_increase_pct: None },
    RoundsReference { n_rounds: 2, scores: PrfReference { precision: 0.828, recall: 0.874, f1: 0.8502 }, cost_increase_pct: Some(7.6) },
    RoundsReference { n_rounds: 3, scores: PrfReference { precision: 0.827, recall: 0.866, f1: 0.8459 }, cost_increase_pct: Some(9.9) },
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SequentialReference {
    pub zero_shot_b2_f1: f64,
    pub zero_shot_b4_f1: f64,
    pub continuous_b4_f1: f64,
    pub b4_delta: f64,
}

pub const SEQUENTIAL_REFERENCE: SequentialReference =
    SequentialReference { zero_shot_b2_f1: 0.8177, zero_shot_b4_f1: 0.8252, continuous_b4_f1: 0.8708, b4_delta: 0.0456 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostReference {
    pub debater_call_share_pct: f64,
    pub arbiter_call_share_pct: f64,
    pub mean_tokens_per_item: f64,
}

pub const COST_REFERENCE: CostReference =
    CostReference { debater_call_share_pct: 83.3, arbiter_call_share_pct: 16.7, mean_tokens_per_item: 11_710.0 };

#[derive(Serialize)]
struct Envelope<'a, T: Serialize, R: Serialize> {
    kind: &'a str,
    result: &'a T,
    reference: R,
}

pub fn write_report<T: Serialize, R: Serialize>(
    dir: &Path,
    kind: &str,
    result: &T,
    reference: R,
    text: &str,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(&Envelope { kind, result, reference }).map_err(std::io::Error::other)?;
    json.push('\n');
    std::fs::write(dir.join("report.json"), json)?;
    std::fs::write(dir.join("report.txt"), text)
}

fn prf_row(label: &str, p: f64, r: f64, f1: f64, extra: &str) -> String {
    format!("{label:<12} {p:>9.4} {r:>9.4} {f1:>9.4}  {extra}\n")
}

pub fn bench_text(result: &BenchResult) -> String {
    let mut out = format!("config {}\n\n{:<12} {:>9} {:>9} {:>9}  reference P/R/F1\n", result.fingerprint, "modality", "P", "R", "F1");
    for (m, metrics) in &result.metrics.by_modality {
        let reference = BENCH_REFERENCE
            .iter()
            .find(|(rm, _)| rm == m)
            .map(|(_, r)| format!("{:.2}/{:.2}/{:.2}", r.precision, r.recall, r.f1))
            .unwrap_or_default();
        out += &prf_row(m.as_str(), metrics.precision, metrics.recall, metrics.f1, &reference);
    }
    let o = &result.metrics.overall;
    out += &prf_row("overall", o.precision, o.recall, o.f1, "");
    out += &format!(
        "\nevaluated {} | excluded {} (provider errors {}) | tp {} fp {} fn {} tn {}\n",
        o.evaluated, o.invalid_excluded, o.provider_errors, o.tp, o.fp, o.fn_, o.tn
    );
    out += &cost_text(&result.cost);
    out += &format!("wall time {} ms\n", result.wall_ms);
    out
}

pub fn cost_text(cost: &super::bench::CostReport) -> String {
    let mut out = format!("\ncalls over {} runs:\n", cost.runs);
    for tier in Tier::ALL {
        out += &format!(
            "  {:<13} {:>7} ({:.1}%)\n",
            tier.as_str(),
            cost.calls_by_tier.get(&tier).copied().unwrap_or(0),
            cost.call_share_pct.get(&tier).copied().unwrap_or(0.0)
        );
    }
    out += &format!(
        "tokens in {} out {} | mean per item {:.1} (reference {:.0}) | mean latency {:.1} ms\n",
        cost.tokens_in, cost.tokens_out, cost.mean_tokens_per_item, COST_REFERENCE.mean_tokens_per_item, cost.mean_latency_ms
    );
    out
}

pub fn sweep_text(rows: &[SweepRow]) -> String {
    let mut out = format!(
        "{:<3} {:>9} {:>9} {:>9} {:>10} {:>8} {:>8} {:>8} {:>10}  reference F1/cost\n",
        "N", "P", "R", "F1", "wall ms", "delta %", "debater", "arbiter", "tokens"
    );
    for r in rows {
        let reference = ROUNDS_REFERENCE
            .iter()
            .find(|x| x.n_rounds == r.n_rounds)
            .map(|x| match x.cost_increase_pct {
                Some(c) => format!("{:.4}/+{c:.1}%", x.scores.f1),
                None => format!("{:.4}/--", x.scores.f1),
            })
            .unwrap_or_default();
        out += &format!(
            "{:<3} {:>9.4} {:>9.4} {:>9.4} {:>10} {:>+8.1} {:>8} {:>8} {:>10}  {reference}\n",
            r.n_rounds, r.metrics.precision, r.metrics.recall, r.metrics.f1, r.wall_ms, r.cost_delta_pct, r.debater_calls, r.arbiter_calls, r.total_tokens
        );
    }
    out
}

pub fn sequential_text(result: &SequentialResult) -> String {
    let mut out = format!(
        "metric: F1\n{:<6} {:>6} {:>6} {:>10} {:>11} {:>8} {:>8}\n",
        "batch", "size", "pos", "zero-shot", "continuous", "delta", "library"
    );
    for r in &result.rows {
        out += &format!(
            "{:<6} {:>6} {:>6} {:>10.4} {:>11.4} {:>+8.4} {:>8}\n",
            r.batch, r.size, r.positives, r.zero_shot_f1, r.continuous_f1, r.delta, r.library_size_after
        );
    }
    let s = SEQUENTIAL_REFERENCE;
    out += &format!(
        "\nreference: zero-shot B2 {:.4}, B4 {:.4}; continuous B4 {:.4} ({:+.4})\ncuration calls {}\n",
        s.zero_shot_b2_f1,
        s.zero_shot_b4_f1,
        s.continuous_b4_f1,
        s.b4_delta,
        result.curation_cost.total_calls()
    );
    out
}
