//! Datasets, metrics and the experiment drivers built on [`Pipeline`](crate::pipeline::Pipeline).

mod bench;
mod dataset;
mod metrics;
pub mod report;
mod sequential;
mod stratify;

use thiserror::Error;

pub use bench::{cost_report, rounds_sweep, run_benchmark, run_id_for, BenchOptions, BenchResult, CostReport, SweepRow};
pub use dataset::{load_dataset, parse_dataset, require_labels, DatasetError};
pub use metrics::{
    compute_metrics, f1, metrics_for_runs, metrics_report, precision, recall, MetricsReport, MetricsResult, MissingLabel,
    Prediction,
};
pub use sequential::{sequential_experiment, SequentialResult, SequentialRow, SequentialStores};
pub use stratify::{batch_name, stratified_batches};

use crate::config::ConfigError;
use crate::curator::CuratorError;
use crate::log_store::LogStoreError;
use crate::model::Violation;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Store(#[from] LogStoreError),
    #[error(transparent)]
    Curator(#[from] CuratorError),
    #[error(transparent)]
    Metrics(#[from] MissingLabel),
    #[error("item {item_id}: {violation}")]
    InvalidItem { item_id: String, violation: Violation },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}
