use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use aetheria_core::curator::{bootstrap_seed, curate, CurationSummary};
use aetheria_core::debate::render_trajectories;
use aetheria_core::eval::report::{
    bench_text, sequential_text, sweep_text, write_report, BENCH_REFERENCE, COST_REFERENCE, ROUNDS_REFERENCE, SEQUENTIAL_REFERENCE,
};
use aetheria_core::eval::{load_dataset, rounds_sweep, run_benchmark, sequential_experiment, BenchOptions, SequentialStores};
use aetheria_core::jsonl;
use aetheria_core::library::CaseLibrary;
use aetheria_core::log_store::LogStore;
use aetheria_core::model::{ContentItem, GroundTruthLabel, RunRecord, RunStatus};
use aetheria_core::pipeline::RunContext;
use serde_json::json;

use crate::cli::{BenchArgs, BootstrapArgs, Cli, Command, CurateArgs, ModerateArgs, SequentialArgs, ServeArgs};
use crate::review::ReviewStore;
use crate::runtime::Runtime;
use crate::server::{self, infer_modality, new_run_id, AppState};
use crate::{CliError, EXIT_INVALID_OUTPUT, EXIT_OK, EXIT_PROVIDER_ERROR};

/// Runs one command and returns the process exit code.
pub async fn run(cli: Cli, out: &mut dyn Write) -> Result<u8, CliError> {
    match cli.command {
        Command::Moderate(a) => moderate(&cli.global, a, out).await,
        Command::Bench(a) => bench(&cli.global, a, out).await,
        Command::Sweep(a) => sweep(&cli.global, a, out).await,
        Command::Sequential(a) => sequential(&cli.global, a, out).await,
        Command::Curate(a) => curate_cmd(&cli.global, a, out).await,
        Command::Bootstrap(a) => bootstrap(&cli.global, a, out).await,
        Command::Serve(a) => serve(&cli.global, a).await,
    }
}

fn single_rounds(global: &crate::cli::GlobalArgs) -> Result<(), CliError> {
    if global.rounds.len() > 1 {
        return Err(CliError::Config("--rounds takes a single value here; lists are for `sweep`".into()));
    }
    Ok(())
}

fn read_item(a: &ModerateArgs) -> Result<ContentItem, CliError> {
    if let Some(path) = &a.item {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut item: ContentItem = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if let Some(id) = &a.id {
            item.id = id.clone();
        }
        return Ok(item);
    }
    if a.text.is_none() && a.image_ref.is_none() && a.image_description.is_none() {
        return Err(CliError::Input("give --item, or at least one of --text, --image-ref, --image-description".into()));
    }
    Ok(ContentItem {
        id: a.id.clone().unwrap_or_else(|| "cli-item".into()),
        modality: infer_modality(&a.text, &a.image_ref, &a.image_description),
        text: a.text.clone(),
        image_ref: a.image_ref.clone(),
        image_description: a.image_description.clone(),
        label: None,
        category: None,
    })
}

pub fn render_run(run: &RunRecord) -> String {
    let mut s = format!("run_id: {}\nstatus: {}\n", run.run_id, serde_json::to_value(run.status).unwrap().as_str().unwrap_or(""));
    if let Some(r) = &run.report {
        s += &format!(
            "verdict: {:?}\nfinal_score: {:.2}\nrule: {}\nreasoning: {}\n",
            r.verdict,
            r.final_score.value(),
            serde_json::to_value(r.rule_applied).unwrap().as_str().unwrap_or(""),
            r.reasoning
        );
        if !r.cited_evidence.is_empty() {
            s += "evidence:\n";
            for e in &r.cited_evidence {
                s += &format!("  - {e}\n");
            }
        }
    }
    if let Some(t) = &run.transcript {
        s += &render_trajectories(t);
        if !s.ends_with('\n') {
            s.push('\n');
        }
    }
    if let Some(e) = &run.error {
        s += &format!("error: {e}\n");
    }
    s
}

pub fn exit_code(status: RunStatus) -> u8 {
    match status {
        RunStatus::Completed => EXIT_OK,
        RunStatus::InvalidOutput => EXIT_INVALID_OUTPUT,
        RunStatus::ProviderError => EXIT_PROVIDER_ERROR,
    }
}

async fn moderate(global: &crate::cli::GlobalArgs, a: ModerateArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    single_rounds(global)?;
    let item = read_item(&a)?;
    item.validate().map_err(|v| CliError::Input(format!("{}: {v}", v.field())))?;
    let rt = Runtime::build(global, None)?;
    let store = LogStore::open(&rt.settings.paths.runs_dir)?;
    let ctx = RunContext { run_id: a.run_id.clone().unwrap_or_else(new_run_id), batch_id: None };
    let run = rt.pipeline.run_item(&item, ctx).await.map_err(|v| CliError::Input(v.to_string()))?;
    store.append(&run)?;
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&run).expect("run serializes"))?;
    } else {
        write!(out, "{}", render_run(&run))?;
    }
    Ok(exit_code(run.status))
}

fn bench_reference() -> serde_json::Value {
    let by_modality: serde_json::Map<String, serde_json::Value> =
        BENCH_REFERENCE.iter().map(|(m, r)| (m.as_str().to_string(), json!(r))).collect();
    json!({"by_modality": by_modality, "cost": COST_REFERENCE})
}

async fn bench(global: &crate::cli::GlobalArgs, a: BenchArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    single_rounds(global)?;
    let items = load_dataset(&a.dataset)?;
    let rt = Runtime::build(global, None)?;
    let store = LogStore::open(&a.out)?;
    let result = run_benchmark(&items, &rt.pipeline, BenchOptions { store: Some(&store), scope: "bench", batch_id: None }).await?;
    let text = bench_text(&result);
    write_report(&a.out, "bench", &result, bench_reference(), &text)?;
    write!(out, "{text}")?;
    Ok(EXIT_OK)
}

async fn sweep(global: &crate::cli::GlobalArgs, a: BenchArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let items = load_dataset(&a.dataset)?;
    let n_values = if global.rounds.is_empty() { vec![1, 2, 3] } else { global.rounds.clone() };
    let rt = Runtime::build(global, None)?;
    let store = LogStore::open(&a.out)?;
    let rows = rounds_sweep(&items, &rt.pipeline, &n_values, Some(&store)).await?;
    let text = sweep_text(&rows);
    write_report(&a.out, "sweep", &rows, ROUNDS_REFERENCE, &text)?;
    write!(out, "{text}")?;
    Ok(EXIT_OK)
}

/// Arms live in `<out>/zero-shot` and `<out>/continuous`; the continuous
/// library is `<out>/library.jsonl`.
async fn sequential(global: &crate::cli::GlobalArgs, a: SequentialArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    single_rounds(global)?;
    let items = load_dataset(&a.dataset)?;
    let rt = Runtime::build(global, None)?;
    let control = LogStore::open(a.out.join("zero-shot"))?;
    let continuous = LogStore::open(a.out.join("continuous"))?;
    let library = Arc::new(CaseLibrary::open(a.out.join("library.jsonl"))?);
    let result = sequential_experiment(
        &items,
        a.batches,
        &rt.pipeline,
        library,
        SequentialStores { control: Some(&control), continuous: Some(&continuous) },
    )
    .await?;
    let text = sequential_text(&result);
    write_report(&a.out, "sequential", &result, SEQUENTIAL_REFERENCE, &text)?;
    write!(out, "{text}")?;
    Ok(EXIT_OK)
}

/// A log store directory or a bare runs file.
pub fn load_runs(path: &Path) -> Result<Vec<RunRecord>, CliError> {
    if path.is_dir() {
        return Ok(LogStore::open(path)?.all()?);
    }
    if !path.exists() {
        return Err(CliError::Input(format!("{}: no such file or directory", path.display())));
    }
    let loaded = jsonl::load::<RunRecord>(path).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(loaded.records.into_iter().map(|(_, _, r)| r).collect())
}

/// Replaces item labels with those from `dataset`, matched by item id.
fn relabel(runs: &mut [RunRecord], dataset: Option<&Path>) -> Result<(), CliError> {
    let Some(path) = dataset else { return Ok(()) };
    let labels: HashMap<String, GroundTruthLabel> =
        load_dataset(path)?.into_iter().filter_map(|i| i.label.map(|l| (i.id, l))).collect();
    for run in runs {
        if let Some(l) = labels.get(&run.item_id) {
            run.item.label = Some(*l);
        }
    }
    Ok(())
}

fn render_summary(s: &CurationSummary) -> String {
    let mut text = format!("indexed {} | skipped {} | not selected {}\n", s.indexed, s.skipped, s.not_selected);
    for id in &s.case_ids {
        text += &format!("  + {id}\n");
    }
    for (run, reason) in &s.skip_reasons {
        text += &format!("  ! {run}: {reason}\n");
    }
    text += &format!("curator calls {} | tokens {}\n", s.cost.total_calls(), s.cost.tokens_in + s.cost.tokens_out);
    text
}

async fn curate_cmd(global: &crate::cli::GlobalArgs, a: CurateArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let mut runs = load_runs(&a.runs)?;
    relabel(&mut runs, a.labels.as_deref())?;
    let rt = Runtime::build(global, None)?;
    let summary = curate(&runs, a.mode, &rt.library, rt.pipeline.gateway(), rt.pipeline.prompts()).await?;
    write!(out, "{}", render_summary(&summary))?;
    Ok(EXIT_OK)
}

async fn bootstrap(global: &crate::cli::GlobalArgs, a: BootstrapArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let mut runs = load_runs(&a.runs)?;
    relabel(&mut runs, a.labels.as_deref())?;
    let mut exclude = HashSet::new();
    for path in &a.exclude {
        exclude.extend(load_dataset(path)?.into_iter().map(|i| i.id));
    }
    let rt = Runtime::build(global, None)?;
    let summary = bootstrap_seed(&runs, &exclude, &rt.library, rt.pipeline.gateway(), rt.pipeline.prompts()).await?;
    write!(out, "{}", render_summary(&summary))?;
    Ok(EXIT_OK)
}

async fn serve(global: &crate::cli::GlobalArgs, a: ServeArgs) -> Result<u8, CliError> {
    single_rounds(global)?;
    let rt = Runtime::build(global, None)?;
    let store = Arc::new(LogStore::open(&rt.settings.paths.runs_dir)?);
    let review = Arc::new(ReviewStore::open(&rt.settings.paths.review_dir, rt.clock.clone())?);
    let app = server::router(AppState::new(rt.pipeline.clone(), store, review, rt.library.clone()));
    let listener = tokio::net::TcpListener::bind(a.addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(EXIT_OK)
}
