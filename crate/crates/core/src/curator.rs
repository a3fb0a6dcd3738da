//! Offline learning loop: turns finished runs into case library entries.

use std::collections::HashSet;
use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::arbiter::NO_DEBATE;
use crate::debate::{render_trajectories, render_transcript};
use crate::library::{CaseLibrary, LibraryError};
use crate::model::{AgentRole, AuditReport, CaseRecord, CaseSource, CostLedger, GroundTruthLabel, Outcome, RunRecord, RunStatus};
use crate::prompts::PromptSet;
use crate::provider::{CallLog, Gateway, GatewayError};
use crate::sections;
use crate::supporter::render_briefing;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurationMode {
    /// Only false positives and false negatives.
    #[default]
    FailuresOnly,
    IndexAll,
}

impl CurationMode {
    pub fn source(self) -> CaseSource {
        match self {
            CurationMode::FailuresOnly => CaseSource::CuratedFailure,
            CurationMode::IndexAll => CaseSource::SequentialIndexAll,
        }
    }
}

impl std::str::FromStr for CurationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "failures" | "failures_only" | "failures-only" => Ok(CurationMode::FailuresOnly),
            "all" | "index_all" | "index-all" => Ok(CurationMode::IndexAll),
            other => Err(format!("unknown curation mode `{other}` (failures|all)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum CuratorError {
    #[error("run {0} has no ground-truth label")]
    UnlabeledRun(String),
    #[error("run {0} did not complete")]
    NotCompleted(String),
    #[error("curator response for run {run_id}: {reason}")]
    CueParse { run_id: String, reason: String },
    #[error(transparent)]
    Provider(#[from] GatewayError),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error("library {} is locked by another curation ({})", library.display(), lock.display())]
    Locked { library: PathBuf, lock: PathBuf },
    #[error("lock file {}: {source}", path.display())]
    LockIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Per-batch result. Every input run is counted in exactly one of
/// `indexed`, `skipped` or `not_selected`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurationSummary {
    pub indexed: usize,
    pub skipped: usize,
    pub not_selected: usize,
    pub case_ids: Vec<String>,
    pub skip_reasons: Vec<(String, String)>,
    pub cost: CostLedger,
}

impl CurationSummary {
    fn skip(&mut self, run_id: &str, reason: impl Into<String>) {
        self.skipped += 1;
        self.skip_reasons.push((run_id.to_string(), reason.into()));
    }
}

/// Deterministic so that curating the same run twice is a no-op.
pub fn case_id_for(run_id: &str) -> String {
    let digest = Sha256::digest(run_id.as_bytes());
    format!("case-{}", &hex::encode(digest)[..16])
}

fn usable(run: &RunRecord) -> Result<(&AuditReport, GroundTruthLabel), CuratorError> {
    if run.status != RunStatus::Completed {
        return Err(CuratorError::NotCompleted(run.run_id.clone()));
    }
    let report = run.report.as_ref().ok_or_else(|| CuratorError::NotCompleted(run.run_id.clone()))?;
    let label = run.label().ok_or_else(|| CuratorError::UnlabeledRun(run.run_id.clone()))?;
    Ok((report, label))
}

/// Ids of the runs `mode` would curate. Every run must be completed and labeled.
pub fn select_runs(runs: &[RunRecord], mode: CurationMode) -> Result<Vec<String>, CuratorError> {
    let mut out = Vec::new();
    for run in runs {
        let (report, label) = usable(run)?;
        if mode == CurationMode::IndexAll || Outcome::of(report.verdict, label).is_failure() {
            out.push(run.run_id.clone());
        }
    }
    Ok(out)
}

fn render_report(report: &AuditReport) -> String {
    let mut out = format!(
        "Judgment: {}\nFinal score: {:.2}\nRule: {:?}\nReasoning: {}",
        report.verdict,
        report.final_score.value(),
        report.rule_applied,
        report.reasoning
    );
    for e in &report.cited_evidence {
        out.push_str(&format!("\n- {e}"));
    }
    out
}

/// Parses the curator response into `(summary, key_cues)`.
pub fn parse_curator_output(raw: &str) -> Result<(String, Vec<String>), String> {
    let parsed = sections::split(raw, &["SUMMARY", "KEY CUES"]);
    let summary = parsed.get("SUMMARY").map(|s| s.trim().to_string()).filter(|s| !s.is_empty());
    let cues = parsed.get("KEY CUES").map(|b| sections::bullets(b)).unwrap_or_default();
    if cues.is_empty() {
        return Err("no KEY CUES block".into());
    }
    let summary = summary.ok_or("no SUMMARY line")?;
    Ok((summary, cues))
}

/// One curator call over a completed, labeled run.
pub async fn extract_cues(
    run: &RunRecord,
    source: CaseSource,
    gateway: &Gateway,
    prompts: &PromptSet,
    log: &mut CallLog,
) -> Result<CaseRecord, CuratorError> {
    let (report, label) = usable(run)?;
    let outcome = Outcome::of(report.verdict, label);
    let transcript = run.transcript.as_ref().map(|t| format!("{}\n\nTrajectories:\n{}", render_transcript(t), render_trajectories(t)));
    let prompt = prompts
        .curator()
        .render(&[
            ("ground_truth", &label.to_string()),
            ("verdict", &report.verdict.to_string()),
            ("outcome", outcome.describe()),
            ("input", &run.standardized_text),
            ("briefing", &render_briefing(run.briefing.as_ref())),
            ("transcript", transcript.as_deref().unwrap_or(NO_DEBATE)),
            ("report", &render_report(report)),
        ])
        .expect("curator template validated at load");
    let exchange = gateway.complete(AgentRole::Curator, &prompt, log).await?;
    let (summary, key_cues) = parse_curator_output(&exchange.response)
        .map_err(|reason| CuratorError::CueParse { run_id: run.run_id.clone(), reason })?;
    let indexed_text = CaseRecord::compose_indexed_text(&summary, &key_cues, &run.standardized_text);
    Ok(CaseRecord {
        case_id: case_id_for(&run.run_id),
        summary,
        key_cues,
        verdict: label.expected_verdict(),
        category: run.item.category.clone(),
        source,
        source_run_id: Some(run.run_id.clone()),
        indexed_text,
    })
}

/// Advisory lock held for the duration of a curation. Removed on drop.
#[derive(Debug)]
pub struct LibraryLock {
    path: PathBuf,
}

impl LibraryLock {
    pub fn lock_path(library: &Path) -> PathBuf {
        let mut name = library.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".lock");
        library.with_file_name(name)
    }

    pub fn acquire(library: &Path) -> Result<Self, CuratorError> {
        let path = Self::lock_path(library);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(LibraryLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CuratorError::Locked { library: library.to_path_buf(), lock: path })
            }
            Err(source) => Err(CuratorError::LockIo { path, source }),
        }
    }
}

impl Drop for LibraryLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

fn lock(library: &CaseLibrary) -> Result<Option<LibraryLock>, CuratorError> {
    library.path().map(LibraryLock::acquire).transpose()
}

async fn index_runs<'r>(
    runs: impl Iterator<Item = &'r RunRecord>,
    source: CaseSource,
    library: &CaseLibrary,
    gateway: &Gateway,
    prompts: &PromptSet,
    summary: &mut CurationSummary,
) {
    for run in runs {
        let case_id = case_id_for(&run.run_id);
        if library.contains(&case_id) {
            summary.skip(&run.run_id, format!("duplicate: {case_id} already indexed"));
            continue;
        }
        let mut log = CallLog::new();
        let result = extract_cues(run, source, gateway, prompts, &mut log).await;
        summary.cost.absorb(&log.ledger);
        match result.and_then(|record| library.index(record).map_err(CuratorError::from)) {
            Ok(id) => {
                summary.indexed += 1;
                summary.case_ids.push(id);
            }
            Err(e) => {
                tracing::warn!(run = %run.run_id, error = %e, "curation skipped");
                summary.skip(&run.run_id, e.to_string());
            }
        }
    }
}

/// select, extract, index. Idempotent per run id; per-run failures are
/// counted as skipped.
pub async fn curate(
    runs: &[RunRecord],
    mode: CurationMode,
    library: &CaseLibrary,
    gateway: &Gateway,
    prompts: &PromptSet,
) -> Result<CurationSummary, CuratorError> {
    let _lock = lock(library)?;
    let mut summary = CurationSummary::default();
    let mut selected = Vec::new();
    for run in runs {
        match usable(run) {
            Err(e) => summary.skip(&run.run_id, e.to_string()),
            Ok((report, label)) => {
                if mode == CurationMode::IndexAll || Outcome::of(report.verdict, label).is_failure() {
                    selected.push(run);
                } else {
                    summary.not_selected += 1;
                }
            }
        }
    }
    index_runs(selected.into_iter(), mode.source(), library, gateway, prompts, &mut summary).await;
    Ok(summary)
}

/// Builds seed records from cold-start runs. Runs whose item id is in
/// `exclude` are refused, keeping seed and evaluation data disjoint.
pub async fn bootstrap_seed(
    runs: &[RunRecord],
    exclude: &HashSet<String>,
    library: &CaseLibrary,
    gateway: &Gateway,
    prompts: &PromptSet,
) -> Result<CurationSummary, CuratorError> {
    let _lock = lock(library)?;
    let mut summary = CurationSummary::default();
    let mut eligible = Vec::new();
    for run in runs {
        if exclude.contains(&run.item_id) {
            summary.skip(&run.run_id, format!("item {} is in the exclusion list", run.item_id));
        } else if let Err(e) = usable(run) {
            summary.skip(&run.run_id, e.to_string());
        } else {
            eligible.push(run);
        }
    }
    index_runs(eligible.into_iter(), CaseSource::SeedBootstrap, library, gateway, prompts, &mut summary).await;
    Ok(summary)
}
