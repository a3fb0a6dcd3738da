use std::net::SocketAddr;
use std::path::PathBuf;

use aetheria_core::curator::CurationMode;
use aetheria_core::model::TurnOrder;
use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};

fn parse_turn_order(s: &str) -> Result<TurnOrder, String> {
    match s.replace('-', "_").as_str() {
        "strict_first" => Ok(TurnOrder::StrictFirst),
        "loose_first" => Ok(TurnOrder::LooseFirst),
        _ => Err(format!("expected strict-first or loose-first, got `{s}`")),
    }
}

fn parse_timestamp(s: &str) -> Result<DateTime<Utc>, String> {
    DateTime::parse_from_rfc3339(s).map(|t| t.with_timezone(&Utc)).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "aetheria", version, about = "Multi-agent debate moderation: run, evaluate, curate, serve")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Answer model calls from a replay script instead of the network.
    #[arg(long, global = true)]
    pub replay: Option<PathBuf>,
    /// Debate rounds. `sweep` takes a comma-separated list.
    #[arg(long, global = true, value_delimiter = ',')]
    pub rounds: Vec<u32>,
    /// Precedents retrieved per item.
    #[arg(long = "top-k", global = true)]
    pub top_k: Option<usize>,
    /// strict-first or loose-first.
    #[arg(long = "turn-order", global = true, value_parser = parse_turn_order)]
    pub turn_order: Option<TurnOrder>,
    /// Ablations, e.g. `no-supporter,no-image`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub ablate: Vec<String>,
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Case library file.
    #[arg(long, global = true)]
    pub library: Option<PathBuf>,
    /// Log store directory for `moderate` and `serve`.
    #[arg(long = "runs-dir", global = true)]
    pub runs_dir: Option<PathBuf>,
    /// Review data directory for `serve`.
    #[arg(long = "review-dir", global = true)]
    pub review_dir: Option<PathBuf>,
    /// Stamp every record with this RFC 3339 time.
    #[arg(long = "fixed-clock", global = true, value_parser = parse_timestamp)]
    pub fixed_clock: Option<DateTime<Utc>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moderate one item and print its audit report.
    Moderate(ModerateArgs),
    /// Evaluate a labeled dataset.
    Bench(BenchArgs),
    /// Evaluate a labeled dataset once per `--rounds` value.
    Sweep(BenchArgs),
    /// Zero-shot versus continuous-learning evaluation over stratified batches.
    Sequential(SequentialArgs),
    /// Distill logged runs into the case library.
    Curate(CurateArgs),
    /// Seed the case library from cold-start runs.
    Bootstrap(BootstrapArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModerateArgs {
    /// JSON file holding one content item.
    #[arg(long, conflicts_with_all = ["text", "image_ref", "image_description"])]
    pub item: Option<PathBuf>,
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long)]
    pub text: Option<String>,
    #[arg(long = "image-ref")]
    pub image_ref: Option<String>,
    #[arg(long = "image-description")]
    pub image_description: Option<String>,
    /// Run id to record; random by default.
    #[arg(long = "run-id")]
    pub run_id: Option<String>,
    /// Print the full run record as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Labeled dataset, JSON Lines.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Experiment directory for runs and reports.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SequentialArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub batches: usize,
}

fn parse_mode(s: &str) -> Result<CurationMode, String> {
    s.parse()
}

#[derive(Debug, Clone, Args)]
pub struct CurateArgs {
    /// failures or all.
    #[arg(long, value_parser = parse_mode, default_value = "failures")]
    pub mode: CurationMode,
    /// Log store directory or runs JSON Lines file.
    #[arg(long)]
    pub runs: PathBuf,
    /// Dataset whose labels override those carried on the runs.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BootstrapArgs {
    #[arg(long)]
    pub runs: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Datasets whose items must never seed the library.
    #[arg(long)]
    pub exclude: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
}
