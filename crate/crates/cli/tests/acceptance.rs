//! Acceptance gate: one PASS/FAIL (or SKIP) line per criterion, non-zero exit
//! when any criterion fails. Tolerances are pinned below.

mod common;

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use aetheria_core::arbiter::{build_prompt, parse_arbiter_output};
use aetheria_core::clock::FixedClock;
use aetheria_core::config::{AblationFlags, ExperimentConfig};
use aetheria_core::curator::{curate, select_runs, CurationMode};
use aetheria_core::debate::resolve_score;
use aetheria_core::eval::{
    compute_metrics, f1, run_benchmark, sequential_experiment, stratified_batches, BenchOptions, Prediction, SequentialStores,
};
use aetheria_core::library::CaseLibrary;
use aetheria_core::model::{
    ActiveDebaters, AgentRole, AuditReport, CaseRecord, CaseSource, ContentItem, DebateTranscript, DebateTurn, GroundTruthLabel,
    Modality, RiskScore, RuleApplied, RunRecord, RunStatus, ScoreSource, Tier, TurnOrder, Verdict,
};
use aetheria_core::pipeline::{Pipeline, RunContext};
use aetheria_core::preprocessor::StandardizedInput;
use aetheria_core::prompts::PromptSet;
use aetheria_core::provider::{Gateway, ReplayScriptBuilder, RetryPolicy};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CASE_RUNTIME_LIMIT: Duration = Duration::from_secs(1);
const CALL_COUNT_RUNTIME_LIMIT: Duration = Duration::from_secs(5);
const METRIC_IDENTITY_TOLERANCE: f64 = 1e-12;
const METRIC_INSTANCES: usize = 200;
const METRIC_MAX_ITEMS: usize = 20;
const EXCLUSION_TRIALS: usize = 100;
const CURATION_SETS: usize = 100;
const RETRIEVAL_CASES: usize = 50;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rt() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap()
}

fn pipeline(script: &ReplayScriptBuilder, config: ExperimentConfig, library: Option<Arc<CaseLibrary>>) -> Pipeline {
    let gw = Gateway::new(Arc::new(script.build()), config.models.routes(), RetryPolicy::none(), Arc::new(FixedClock::epoch())).unwrap();
    Pipeline::new(config, Arc::new(gw), Arc::new(PromptSet::builtin()), library).unwrap()
}

fn case_run(case: &str, run_id: &str) -> Result<(RunRecord, Duration), String> {
    let dir = fixtures().join(case);
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |f: &str| dir.join(f).display().to_string();
    let started = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_aetheria"))
        .current_dir(tmp.path())
        .args(["--config", &p("config.toml"), "--replay", &p("replay.jsonl"), "--library", &p("library.jsonl")])
        .args(["moderate", "--item", &p("item.json"), "--json", "--run-id", run_id])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure!(o.status.code() == Some(0), "{case}: exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    let run: RunRecord = serde_json::from_slice(&o.stdout).map_err(|e| format!("{case}: {e}"))?;
    Ok((run, elapsed))
}

fn case_replays() -> Outcome {
    let expect = [
        ("case1", 0.95, [0.85, 0.90], [0.40, 0.75]),
        ("case2", 1.0, [0.70, 0.80], [0.30, 0.20]),
    ];
    let mut times = Vec::new();
    for (case, score, strict, loose) in expect {
        let (run, elapsed) = case_run(case, &format!("run-{case}"))?;
        let report = run.report.as_ref().ok_or(format!("{case}: no report"))?;
        let t = run.transcript.as_ref().ok_or(format!("{case}: no transcript"))?;
        ensure!(report.verdict == Verdict::Unsafe, "{case}: verdict {:?}", report.verdict);
        ensure!(report.final_score.value() == score, "{case}: score {}", report.final_score.value());
        ensure!(t.trajectory(AgentRole::StrictDebater) == strict, "{case}: strict {:?}", t.trajectory(AgentRole::StrictDebater));
        ensure!(t.trajectory(AgentRole::LooseDebater) == loose, "{case}: loose {:?}", t.trajectory(AgentRole::LooseDebater));
        ensure!(elapsed < CASE_RUNTIME_LIMIT, "{case}: took {elapsed:?}");
        times.push(format!("{case} {} ms", elapsed.as_millis()));
    }
    Ok(times.join(", "))
}

fn score_fallback() -> Outcome {
    let prev = RiskScore::new(0.7).unwrap();
    let cases: [(&str, Option<RiskScore>, f64, ScoreSource); 5] = [
        ("no number here", None, 0.5, ScoreSource::FallbackDefault),
        ("still no number", Some(prev), 0.7, ScoreSource::FallbackPrevious),
        ("Risk Score: 1.7", None, 0.5, ScoreSource::FallbackDefault),
        ("Risk Score: -0.2", Some(prev), 0.7, ScoreSource::FallbackPrevious),
        ("Risk Score: 0.35", Some(prev), 0.35, ScoreSource::Parsed),
    ];
    for (text, previous, value, source) in cases {
        let (s, src) = resolve_score(text, previous);
        ensure!(s.value() == value && src == source, "{text:?}: got ({}, {src:?})", s.value());
    }

    // Through the pipeline: garbage in round 1 and round 2 for the strict debater.
    let mut s = ReplayScriptBuilder::new();
    s.push(AgentRole::Supporter, "SUMMARY: s", 1, 1);
    s.push(AgentRole::StrictDebater, "I refuse to score.", 1, 1);
    s.push(AgentRole::LooseDebater, "Risk Score: 0.3", 1, 1);
    s.push(AgentRole::StrictDebater, "Still no score.", 1, 1);
    s.push(AgentRole::LooseDebater, "Risk Score: 9", 1, 1);
    s.push(AgentRole::Arbiter, SAFE, 1, 1);
    let p = pipeline(&s, ExperimentConfig::default(), None);
    let run = rt().block_on(p.run_item(&ContentItem::text_only("i", "hello"), RunContext { run_id: "r".into(), batch_id: None }));
    let run = run.map_err(|e| e.to_string())?;
    let t = run.transcript.ok_or("no transcript")?;
    ensure!(t.trajectory(AgentRole::StrictDebater) == [0.5, 0.5], "strict {:?}", t.trajectory(AgentRole::StrictDebater));
    ensure!(t.trajectory(AgentRole::LooseDebater) == [0.3, 0.3], "loose {:?}", t.trajectory(AgentRole::LooseDebater));
    Ok("5 direct cases + pipeline round-1/round-2 fallback".into())
}

fn snapshot_transcript() -> DebateTranscript {
    let mut turns = Vec::new();
    for (round, strict, loose) in [(1, 0.85, 0.40), (2, 0.90, 0.75)] {
        for (role, score, name) in [(AgentRole::StrictDebater, strict, "Strict"), (AgentRole::LooseDebater, loose, "Loose")] {
            turns.push(DebateTurn {
                role,
                round,
                argument: format!("{name} argument for round {round}.\nRisk Score: {score:.2}"),
                score: RiskScore::new(score).unwrap(),
                score_source: ScoreSource::Parsed,
            });
        }
    }
    DebateTranscript::new(turns, 2, TurnOrder::StrictFirst, ActiveDebaters::Both).unwrap()
}

fn adjudication_parsing() -> Outcome {
    let input = StandardizedInput {
        text: "USER TEXT:\nCan I mix these two cleaners?\n\nIMAGE DESCRIPTION:\nbleach and ammonia bottles".into(),
        modality: Modality::TextImage,
        placeholder_used: false,
    };
    let t = snapshot_transcript();
    let prompt = build_prompt(&input, "SUMMARY: chemical mixing question", Some(&t), &PromptSet::builtin());
    let snapshot = std::fs::read_to_string(fixtures().join("arbiter_prompt.snapshot.txt")).map_err(|e| e.to_string())?;
    ensure!(prompt == snapshot, "arbiter prompt drifted from the snapshot");
    let (r1, r2, r3) = (prompt.find("Rule 1:"), prompt.find("Rule 2:"), prompt.find("Rule 3:"));
    ensure!(r1 < r2 && r2 < r3 && r1.is_some(), "rules out of order");

    let full = parse_arbiter_output("FINAL_JUDGMENT: Safe\nFINAL_SCORE: 0.10\nRULE: 3\nREASONING: nothing dominates", Some(&t))
        .map_err(|e| e.to_string())?;
    ensure!(
        full.verdict == Verdict::Safe && full.final_score.value() == 0.10 && full.rule_applied == RuleApplied::Rule3DefaultSafe,
        "full block parsed as {full:?}"
    );
    let only = parse_arbiter_output("FINAL_JUDGMENT: Unsafe", Some(&t)).map_err(|e| e.to_string())?;
    ensure!(only.verdict == Verdict::Unsafe, "judgment-only verdict {:?}", only.verdict);
    ensure!(only.final_score.value() == 0.90, "judgment-only score {}", only.final_score.value());
    ensure!(only.rule_applied == RuleApplied::Unstated, "judgment-only rule {:?}", only.rule_applied);
    ensure!(only.reasoning.contains("derived from last Strict Debater score"), "judgment-only reasoning lacks the derivation note");
    for garbage in ["FINAL_JUDGMENT: maybe", "no structure at all", "", "FINAL_JUDGMENT: Safe\nFINAL_JUDGMENT: Unsafe"] {
        ensure!(parse_arbiter_output(garbage, Some(&t)).is_err(), "{garbage:?} was accepted");
    }
    Ok(format!("snapshot {} bytes, full/judgment-only/4 garbage inputs", snapshot.len()))
}

fn call_count_law() -> Outcome {
    let started = Instant::now();
    let items: Vec<ContentItem> = (0..10).map(|i| ContentItem::text_only(format!("c{i}"), "txt").with_label(GroundTruthLabel::Safe)).collect();
    let mut checked = Vec::new();
    for (ablation, per_item) in [("full", 1u64), ("no-supporter", 0), ("arbiter-only", 0)] {
        for n in 1..=3u32 {
            let flags = AblationFlags::default().apply(ablation).unwrap();
            let mut s = ReplayScriptBuilder::new();
            for _ in &items {
                if flags.supporter_active() {
                    s.push(AgentRole::Supporter, "SUMMARY: s", 1, 1);
                }
                if flags.debate_enabled {
                    for _ in 0..n {
                        s.push(AgentRole::StrictDebater, "Risk Score: 0.8", 1, 1);
                        s.push(AgentRole::LooseDebater, "Risk Score: 0.3", 1, 1);
                    }
                }
                s.push(AgentRole::Arbiter, SAFE, 1, 1);
            }
            let config = ExperimentConfig { n_rounds: n, ablation: flags, ..Default::default() };
            let p = pipeline(&s, config, None);
            let r = rt().block_on(run_benchmark(&items, &p, BenchOptions::default())).map_err(|e| e.to_string())?;
            let expected_debater = if flags.debate_enabled { 10 * (per_item + 2 * n as u64) } else { 0 };
            let got = (r.cost.calls_by_tier[&Tier::DebaterTier], r.cost.calls_by_tier[&Tier::ArbiterTier]);
            ensure!(got == (expected_debater, 10), "{ablation} N={n}: got {got:?}, want ({expected_debater}, 10)");
            if ablation != "arbiter-only" || n == 1 {
                checked.push(format!("{ablation}/N{n}={}", got.0));
            }
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < CALL_COUNT_RUNTIME_LIMIT, "took {elapsed:?}");
    Ok(format!("{} in {} ms", checked.join(" "), elapsed.as_millis()))
}

#[derive(Clone, Copy)]
enum P {
    Done(Verdict),
    Invalid,
    Provider,
}

fn random_predictions(rng: &mut ChaCha8Rng, n: usize, invalid_rate: f64) -> Vec<(P, GroundTruthLabel)> {
    (0..n)
        .map(|_| {
            let p = if rng.random_bool(invalid_rate) {
                if rng.random_bool(0.5) { P::Invalid } else { P::Provider }
            } else if rng.random_bool(0.5) {
                P::Done(Verdict::Unsafe)
            } else {
                P::Done(Verdict::Safe)
            };
            (p, if rng.random_bool(0.433) { GroundTruthLabel::Risky } else { GroundTruthLabel::Safe })
        })
        .collect()
}

fn to_inputs(rows: &[(P, GroundTruthLabel)]) -> (Vec<Prediction>, HashMap<String, GroundTruthLabel>) {
    let mut preds = Vec::new();
    let mut labels = HashMap::new();
    for (i, (p, l)) in rows.iter().enumerate() {
        let id = format!("i{i}");
        let (status, verdict) = match p {
            P::Done(v) => (RunStatus::Completed, Some(*v)),
            P::Invalid => (RunStatus::InvalidOutput, None),
            P::Provider => (RunStatus::ProviderError, None),
        };
        preds.push(Prediction { item_id: id.clone(), status, verdict });
        labels.insert(id, *l);
    }
    (preds, labels)
}

fn metrics_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..METRIC_INSTANCES {
        let n = rng.random_range(0..=METRIC_MAX_ITEMS);
        let rows = random_predictions(&mut rng, n, 0.2);
        let (preds, labels) = to_inputs(&rows);
        let m = compute_metrics(&preds, &labels).map_err(|e| e.to_string())?;
        let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
        for (p, l) in &rows {
            match (p, l) {
                (P::Done(Verdict::Unsafe), GroundTruthLabel::Risky) => tp += 1,
                (P::Done(Verdict::Unsafe), GroundTruthLabel::Safe) => fp += 1,
                (P::Done(Verdict::Safe), GroundTruthLabel::Risky) => fn_ += 1,
                (P::Done(Verdict::Safe), GroundTruthLabel::Safe) => tn += 1,
                _ => {}
            }
        }
        ensure!((m.tp, m.fp, m.fn_, m.tn) == (tp, fp, fn_, tn), "instance {k}: cells differ");
        let div = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let f = div(2 * tp, 2 * tp + fp + fn_);
        ensure!((m.precision - div(tp, tp + fp)).abs() <= METRIC_IDENTITY_TOLERANCE, "instance {k}: precision");
        ensure!((m.recall - div(tp, tp + fn_)).abs() <= METRIC_IDENTITY_TOLERANCE, "instance {k}: recall");
        ensure!((m.f1 - f).abs() <= METRIC_IDENTITY_TOLERANCE, "instance {k}: f1 {} vs {f}", m.f1);
    }
    let rounded = format!("{:.2}", f1(0.83, 0.85));
    ensure!(rounded == "0.84", "F1(0.83, 0.85) rounds to {rounded}");
    Ok(format!("{METRIC_INSTANCES} instances, F1(0.83, 0.85) = {:.4} -> {rounded}", f1(0.83, 0.85)))
}

fn exclusion_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..EXCLUSION_TRIALS {
        let n = rng.random_range(0..=30);
        let rows = random_predictions(&mut rng, n, 0.0);
        let (p0, l0) = to_inputs(&rows);
        let base = compute_metrics(&p0, &l0).map_err(|e| e.to_string())?;
        let mut grown = rows.clone();
        for _ in 0..rng.random_range(1..=10) {
            let bad = if rng.random_bool(0.5) { P::Invalid } else { P::Provider };
            let label = if rng.random_bool(0.5) { GroundTruthLabel::Risky } else { GroundTruthLabel::Safe };
            grown.insert(rng.random_range(0..=grown.len()), (bad, label));
        }
        let (p1, l1) = to_inputs(&grown);
        let after = compute_metrics(&p1, &l1).map_err(|e| e.to_string())?;
        ensure!(
            base.precision.to_bits() == after.precision.to_bits() && base.recall.to_bits() == after.recall.to_bits(),
            "trial {trial}: P/R changed"
        );
    }
    Ok(format!("{EXCLUSION_TRIALS} trials"))
}

fn labeled_run(id: &str, verdict: Verdict, label: GroundTruthLabel) -> RunRecord {
    let t = chrono::DateTime::<chrono::Utc>::UNIX_EPOCH;
    let text = format!("content of {id}");
    RunRecord {
        run_id: id.into(),
        item_id: format!("item-{id}"),
        batch_id: None,
        item: ContentItem::text_only(format!("item-{id}"), text.clone()).with_label(label),
        config_fingerprint: "fp".into(),
        standardized_text: text,
        placeholder_used: false,
        briefing: None,
        transcript: None,
        report: Some(AuditReport {
            verdict,
            final_score: RiskScore::new(if verdict == Verdict::Unsafe { 0.9 } else { 0.1 }).unwrap(),
            rule_applied: RuleApplied::Rule2RiskConfirmation,
            reasoning: "r".into(),
            cited_evidence: vec![],
        }),
        status: RunStatus::Completed,
        raw_output: None,
        error: None,
        cost: Default::default(),
        exchanges: vec![],
        started_at: t,
        finished_at: t,
    }
}

fn curation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for set in 0..CURATION_SETS {
        let n = rng.random_range(0..25);
        let runs: Vec<RunRecord> = (0..n)
            .map(|i| {
                let v = if rng.random_bool(0.5) { Verdict::Unsafe } else { Verdict::Safe };
                let l = if rng.random_bool(0.5) { GroundTruthLabel::Risky } else { GroundTruthLabel::Safe };
                labeled_run(&format!("s{set}-r{i}"), v, l)
            })
            .collect();
        let oracle: Vec<String> = runs
            .iter()
            .filter(|r| {
                let (v, l) = (r.verdict().unwrap(), r.label().unwrap());
                (v == Verdict::Unsafe && l == GroundTruthLabel::Safe) || (v == Verdict::Safe && l == GroundTruthLabel::Risky)
            })
            .map(|r| r.run_id.clone())
            .collect();
        let got = select_runs(&runs, CurationMode::FailuresOnly).map_err(|e| e.to_string())?;
        ensure!(got == oracle, "set {set}: selected {got:?}, oracle {oracle:?}");
    }

    let runs = vec![
        labeled_run("a", Verdict::Unsafe, GroundTruthLabel::Safe),
        labeled_run("b", Verdict::Safe, GroundTruthLabel::Risky),
        labeled_run("c", Verdict::Safe, GroundTruthLabel::Safe),
    ];
    let mut s = ReplayScriptBuilder::new();
    for _ in 0..2 {
        s.push(AgentRole::Curator, CUES, 1, 1);
    }
    let p = pipeline(&s, ExperimentConfig::default(), None);
    let library = CaseLibrary::in_memory();
    let (first, second) = rt().block_on(async {
        let first = curate(&runs, CurationMode::FailuresOnly, &library, p.gateway(), p.prompts()).await;
        let second = curate(&runs, CurationMode::FailuresOnly, &library, p.gateway(), p.prompts()).await;
        (first, second)
    });
    let (first, second) = (first.map_err(|e| e.to_string())?, second.map_err(|e| e.to_string())?);
    ensure!(first.indexed == 2 && second.indexed == 0, "idempotency: first {} second {}", first.indexed, second.indexed);

    let items = vec![
        item("q1", Modality::TextOnly, GroundTruthLabel::Risky),
        item("q2", Modality::TextOnly, GroundTruthLabel::Safe),
        item("q3", Modality::TextImage, GroundTruthLabel::Risky),
        item("q4", Modality::TextImage, GroundTruthLabel::Safe),
        item("q5", Modality::ImageOnly, GroundTruthLabel::Risky),
        item("q6", Modality::ImageOnly, GroundTruthLabel::Safe),
    ];
    let mut s = ReplayScriptBuilder::new();
    for _ in 0..12 {
        push_item(&mut s, 2, true);
    }
    for _ in 0..6 {
        s.push(AgentRole::Curator, CUES, 1, 1);
    }
    let p = pipeline(&s, ExperimentConfig::default(), None);
    let library = Arc::new(CaseLibrary::in_memory());
    let result = rt()
        .block_on(sequential_experiment(&items, 2, &p, library.clone(), SequentialStores::default()))
        .map_err(|e| e.to_string())?;
    let growth: Vec<usize> = std::iter::once(result.rows[0].library_size_before).chain(result.rows.iter().map(|r| r.library_size_after)).collect();
    ensure!(growth == [0, 3, 6], "library growth {growth:?}");
    Ok(format!("{CURATION_SETS} sets match FP∪FN, second pass indexed 0, growth 0->3->6"))
}

fn stratification() -> Outcome {
    let items: Vec<ContentItem> = (0..1000)
        .map(|i| {
            let l = if i < 433 { GroundTruthLabel::Risky } else { GroundTruthLabel::Safe };
            ContentItem::text_only(format!("s{i:04}"), "t").with_label(l)
        })
        .collect();
    let ids = |seed| -> Result<Vec<Vec<String>>, String> {
        let b = stratified_batches(&items, 4, seed).map_err(|e| e.to_string())?;
        Ok(b.iter().map(|b| b.iter().map(|i| i.id.clone()).collect()).collect())
    };
    for seed in [0u64, 1, 42, 2024] {
        let batches = stratified_batches(&items, 4, seed).map_err(|e| e.to_string())?;
        let counts: Vec<usize> = batches.iter().map(|b| b.iter().filter(|i| i.label == Some(GroundTruthLabel::Risky)).count()).collect();
        ensure!(counts.iter().all(|c| *c == 108 || *c == 109), "seed {seed}: positives {counts:?}");
        ensure!(batches.iter().all(|b| b.len() == 250), "seed {seed}: sizes");
        ensure!(ids(seed)? == ids(seed)?, "seed {seed}: not deterministic");
    }
    ensure!(ids(1)? != ids(2)?, "different seeds gave the same split");
    Ok("4 seeds, positives in {108, 109}, deterministic".into())
}

fn retrieval() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let vocab: Vec<String> = (0..400).map(|i| format!("w{i}")).collect();
    let library = CaseLibrary::in_memory();
    let mut cases = Vec::new();
    for i in 0..RETRIEVAL_CASES {
        let words: Vec<&str> = (0..12).map(|_| vocab[rng.random_range(0..vocab.len())].as_str()).collect();
        let text = words.join(" ");
        let rec = CaseRecord {
            case_id: format!("case-{i:02}"),
            summary: text.clone(),
            key_cues: vec![words[0].to_string()],
            verdict: Verdict::Unsafe,
            category: None,
            source: CaseSource::SeedBootstrap,
            source_run_id: None,
            indexed_text: text,
        };
        library.index(rec.clone()).map_err(|e| e.to_string())?;
        cases.push(rec);
    }
    for c in &cases {
        for k in [1usize, 5, 80] {
            let hits = library.retrieve_top_k(&c.indexed_text, k);
            ensure!(hits.len() == k.min(RETRIEVAL_CASES), "{}: k={k} gave {}", c.case_id, hits.len());
            ensure!(hits[0].0.case_id == c.case_id, "{}: rank 1 was {}", c.case_id, hits[0].0.case_id);
            ensure!(hits.windows(2).all(|w| w[0].1 >= w[1].1), "{}: similarity not non-increasing", c.case_id);
        }
    }
    Ok(format!("{RETRIEVAL_CASES} cases, K in {{1, 5, 80}}"))
}

fn replay_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let items = labeled_items(9);
    write_dataset(&dir.path().join("d.jsonl"), &items);
    let mut s = ReplayScriptBuilder::new();
    for (i, it) in items.iter().enumerate() {
        push_item(&mut s, 2, (it.label == Some(GroundTruthLabel::Risky)) ^ (i == 4));
    }
    s.write(dir.path().join("s.jsonl")).map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for out in ["a", "b"] {
        let o = aetheria(dir.path(), &["--replay", "s.jsonl", "--fixed-clock", "2026-01-01T00:00:00Z", "bench", "--dataset", "d.jsonl", "--out", out]);
        ensure!(o.status.code() == Some(0), "bench {out}: {}", String::from_utf8_lossy(&o.stderr));
        files.push(std::fs::read(dir.path().join(out).join("runs.jsonl")).map_err(|e| e.to_string())?);
    }
    ensure!(!files[0].is_empty() && files[0] == files[1], "runs.jsonl differ");
    Ok(format!("runs.jsonl byte-equal ({} bytes)", files[0].len()))
}

fn live_smoke() -> Option<Outcome> {
    if std::env::var("AETHERIA_LIVE").ok().as_deref() != Some("1") {
        return None;
    }
    Some((|| {
        let config = std::env::var("AETHERIA_LIVE_CONFIG").map_err(|_| "AETHERIA_LIVE_CONFIG not set".to_string())?;
        let dataset = std::env::var("AETHERIA_LIVE_DATASET")
            .map(PathBuf::from)
            .unwrap_or_else(|_| fixtures().join("live/mini.jsonl"));
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = dir.path().join("live");
        let o = Command::new(env!("CARGO_BIN_EXE_aetheria"))
            .current_dir(dir.path())
            .args(["--config", &config, "bench", "--dataset", &dataset.display().to_string(), "--out", &out.display().to_string()])
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(o.status.code() == Some(0), "bench failed: {}", String::from_utf8_lossy(&o.stderr));
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let by_modality = report["result"]["metrics"]["by_modality"].as_object().map(|m| m.len()).unwrap_or(0);
        let mean_tokens = report["result"]["cost"]["mean_tokens_per_item"].as_f64().unwrap_or(0.0);
        let runs = report["result"]["cost"]["runs"].as_u64().unwrap_or(0);
        ensure!(runs == 10, "{runs} runs");
        ensure!(by_modality > 0, "no per-modality metrics");
        ensure!(mean_tokens > 0.0, "mean tokens per item {mean_tokens}");
        Ok(format!("{runs} runs, {by_modality} modalities, mean tokens {mean_tokens:.1}"))
    })())
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("case-study replays", case_replays),
        ("score fallback", score_fallback),
        ("adjudication parsing", adjudication_parsing),
        ("call-count law", call_count_law),
        ("metrics oracle", metrics_oracle),
        ("invalid-exclusion soundness", exclusion_soundness),
        ("curation", curation),
        ("stratification", stratification),
        ("retrieval", retrieval),
        ("replay determinism", replay_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    match live_smoke() {
        None => println!("SKIP live smoke: set AETHERIA_LIVE=1 and AETHERIA_LIVE_CONFIG to run"),
        Some(Ok(detail)) => println!("PASS live smoke: {detail}"),
        Some(Err(why)) => {
            failed += 1;
            println!("FAIL live smoke: {why}");
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
