use std::collections::BTreeMap;
use std::time::Instant;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::{metrics_report, MetricsReport, MetricsResult};
use super::HarnessError;
use crate::log_store::LogStore;
use crate::model::{ContentItem, RunRecord, Tier};
use crate::pipeline::{Pipeline, RunContext};

/// Stable across reruns of the same configuration, scope and item.
pub fn run_id_for(fingerprint: &str, scope: &str, item_id: &str) -> String {
    let mut h = Sha256::new();
    for part in [fingerprint, scope, item_id] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    format!("run-{}", &hex::encode(h.finalize())[..32])
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub runs: usize,
    /// Always contains every tier.
    pub calls_by_tier: BTreeMap<Tier, u64>,
    pub call_share_pct: BTreeMap<Tier, f64>,
    pub total_calls: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub mean_tokens_per_item: f64,
    pub mean_latency_ms: f64,
}

pub fn cost_report(runs: &[RunRecord]) -> CostReport {
    let mut calls_by_tier: BTreeMap<Tier, u64> = Tier::ALL.iter().map(|t| (*t, 0)).collect();
    let (mut tokens_in, mut tokens_out, mut latency) = (0u64, 0u64, 0u64);
    for run in runs {
        for (tier, n) in &run.cost.calls_by_tier {
            *calls_by_tier.entry(*tier).or_insert(0) += n;
        }
        tokens_in += run.cost.tokens_in;
        tokens_out += run.cost.tokens_out;
        latency += run.cost.latency_ms;
    }
    let total_calls: u64 = calls_by_tier.values().sum();
    let call_share_pct = calls_by_tier
        .iter()
        .map(|(t, n)| (*t, if total_calls == 0 { 0.0 } else { 100.0 * *n as f64 / total_calls as f64 }))
        .collect();
    let per_item = |x: u64| if runs.is_empty() { 0.0 } else { x as f64 / runs.len() as f64 };
    CostReport {
        runs: runs.len(),
        calls_by_tier,
        call_share_pct,
        total_calls,
        tokens_in,
        tokens_out,
        mean_tokens_per_item: per_item(tokens_in + tokens_out),
        mean_latency_ms: per_item(latency),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub fingerprint: String,
    pub metrics: MetricsReport,
    pub cost: CostReport,
    pub wall_ms: u64,
    #[serde(skip)]
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BenchOptions<'a> {
    pub store: Option<&'a LogStore>,
    /// Namespaces run ids, e.g. one scope per sweep step or sequential arm.
    pub scope: &'a str,
    pub batch_id: Option<&'a str>,
}

/// Evaluates labeled `items` and persists the runs in item order.
///
/// Items run with the configured parallelism, except against positional
/// (replay) providers, where they run one at a time.
pub async fn run_benchmark(items: &[ContentItem], pipeline: &Pipeline, opts: BenchOptions<'_>) -> Result<BenchResult, HarnessError> {
    super::dataset::require_labels(items)?;
    let fingerprint = pipeline.fingerprint().to_string();
    let run_ids: Vec<String> = items.iter().map(|i| run_id_for(&fingerprint, opts.scope, &i.id)).collect();
    if let Some(store) = opts.store {
        if let Some(dup) = run_ids.iter().find(|id| store.contains(id)) {
            return Err(HarnessError::Store(crate::log_store::LogStoreError::DuplicateRunId(dup.clone())));
        }
        let config = serde_json::to_value(pipeline.config()).expect("config serializes");
        store.record_config(&fingerprint, &config)?;
    }
    let parallelism = if pipeline.gateway().is_positional() { 1 } else { pipeline.config().parallelism };

    let started = Instant::now();
    let results: Vec<_> = stream::iter(items.iter().zip(run_ids).map(|(item, run_id)| {
        let ctx = RunContext { run_id, batch_id: opts.batch_id.map(String::from) };
        async move { pipeline.run_item(item, ctx).await.map_err(|v| (item.id.clone(), v)) }
    }))
    .buffered(parallelism)
    .collect()
    .await;
    let wall_ms = started.elapsed().as_millis() as u64;

    let mut runs = Vec::with_capacity(results.len());
    for result in results {
        let run = result.map_err(|(item_id, violation)| HarnessError::InvalidItem { item_id, violation })?;
        if let Some(store) = opts.store {
            store.append(&run)?;
        }
        runs.push(run);
    }
    Ok(BenchResult {
        fingerprint,
        metrics: metrics_report(&runs)?,
        cost: cost_report(&runs),
        wall_ms,
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_rounds: u32,
    pub metrics: MetricsResult,
    pub wall_ms: u64,
    /// Wall-time change relative to the first row, in percent.
    pub cost_delta_pct: f64,
    pub debater_calls: u64,
    pub arbiter_calls: u64,
    pub total_tokens: u64,
}

/// One benchmark per N, everything else shared.
pub async fn rounds_sweep(
    items: &[ContentItem],
    pipeline: &Pipeline,
    n_values: &[u32],
    store: Option<&LogStore>,
) -> Result<Vec<SweepRow>, HarnessError> {
    if n_values.is_empty() || n_values.contains(&0) {
        return Err(HarnessError::InsufficientData("rounds sweep needs N values >= 1".into()));
    }
    let mut rows: Vec<SweepRow> = Vec::new();
    for &n in n_values {
        let config = crate::config::ExperimentConfig { n_rounds: n, ..pipeline.config().clone() };
        let p = pipeline.with_config(config)?;
        let scope = format!("sweep-n{n}");
        let result = run_benchmark(items, &p, BenchOptions { store, scope: &scope, batch_id: None }).await?;
        let base = rows.first().map(|r| r.wall_ms).unwrap_or(result.wall_ms);
        let cost_delta_pct = if base == 0 { 0.0 } else { 100.0 * (result.wall_ms as f64 - base as f64) / base as f64 };
        rows.push(SweepRow {
            n_rounds: n,
            metrics: result.metrics.overall,
            wall_ms: result.wall_ms,
            cost_delta_pct,
            debater_calls: result.cost.calls_by_tier[&Tier::DebaterTier],
            arbiter_calls: result.cost.calls_by_tier[&Tier::ArbiterTier],
            total_tokens: result.cost.tokens_in + result.cost.tokens_out,
        });
    }
    Ok(rows)
}
