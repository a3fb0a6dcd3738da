use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::bench::{run_benchmark, BenchOptions};
use super::metrics::MetricsResult;
use super::stratify::{batch_name, stratified_batches};
use super::HarnessError;
use crate::curator::{curate, CurationMode};
use crate::library::CaseLibrary;
use crate::log_store::LogStore;
use crate::model::{ContentItem, CostLedger};
use crate::pipeline::Pipeline;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialRow {
    pub batch: String,
    pub size: usize,
    pub positives: usize,
    /// F1 of the control arm (empty library).
    pub zero_shot_f1: f64,
    /// F1 of the continuous-learning arm.
    pub continuous_f1: f64,
    /// `continuous_f1 - zero_shot_f1`, absolute.
    pub delta: f64,
    pub library_size_before: usize,
    pub library_size_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialResult {
    pub rows: Vec<SequentialRow>,
    pub zero_shot: Vec<MetricsResult>,
    pub continuous: Vec<MetricsResult>,
    pub curation_cost: CostLedger,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SequentialStores<'a> {
    pub control: Option<&'a LogStore>,
    pub continuous: Option<&'a LogStore>,
}

/// Control arm first, every batch against its own empty library; then the
/// continuous arm, curating every batch in index-all mode into `library`
/// before the next batch runs.
pub async fn sequential_experiment(
    items: &[ContentItem],
    n_batches: usize,
    pipeline: &Pipeline,
    library: Arc<CaseLibrary>,
    stores: SequentialStores<'_>,
) -> Result<SequentialResult, HarnessError> {
    let batches = stratified_batches(items, n_batches, pipeline.config().seed)?;

    let mut zero_shot = Vec::with_capacity(n_batches);
    for (i, batch) in batches.iter().enumerate() {
        let name = batch_name(i);
        let control = pipeline.with_library(Some(Arc::new(CaseLibrary::in_memory())));
        let scope = format!("zero-shot/{name}");
        let result = run_benchmark(batch, &control, BenchOptions { store: stores.control, scope: &scope, batch_id: Some(&name) }).await?;
        zero_shot.push(result.metrics.overall);
    }

    let continuous_pipeline = pipeline.with_library(Some(library.clone()));
    let mut continuous = Vec::with_capacity(n_batches);
    let mut rows = Vec::with_capacity(n_batches);
    let mut curation_cost = CostLedger::default();
    for (i, batch) in batches.iter().enumerate() {
        let name = batch_name(i);
        let before = library.len();
        let scope = format!("continuous/{name}");
        let result = run_benchmark(
            batch,
            &continuous_pipeline,
            BenchOptions { store: stores.continuous, scope: &scope, batch_id: Some(&name) },
        )
        .await?;
        let summary = curate(&result.runs, CurationMode::IndexAll, &library, pipeline.gateway(), pipeline.prompts()).await?;
        curation_cost.absorb(&summary.cost);
        let m = result.metrics.overall;
        rows.push(SequentialRow {
            batch: name,
            size: batch.len(),
            positives: batch.iter().filter(|i| i.label.is_some_and(|l| l.is_positive())).count(),
            zero_shot_f1: zero_shot[i].f1,
            continuous_f1: m.f1,
            delta: m.f1 - zero_shot[i].f1,
            library_size_before: before,
            library_size_after: library.len(),
        });
        continuous.push(m);
    }
    Ok(SequentialResult { rows, zero_shot, continuous, curation_cost })
}
