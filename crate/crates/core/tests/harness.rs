use std::sync::Arc;

use aetheria_core::clock::FixedClock;
use aetheria_core::config::{AblationFlags, ExperimentConfig};
use aetheria_core::eval::{rounds_sweep, run_benchmark, run_id_for, sequential_experiment, stratified_batches, BenchOptions, HarnessError, SequentialStores};
use aetheria_core::library::CaseLibrary;
use aetheria_core::log_store::{LogStore, LogStoreError};
use aetheria_core::model::{AgentRole, ContentItem, GroundTruthLabel, Modality, RunStatus, Tier};
use aetheria_core::pipeline::Pipeline;
use aetheria_core::prompts::PromptSet;
use aetheria_core::provider::{Gateway, ReplayScriptBuilder, RetryPolicy};

const UNSAFE: &str = "FINAL_JUDGMENT: Unsafe\nFINAL_SCORE: 0.9\nRULE: 2\nREASONING: risk confirmed";
const SAFE: &str = "FINAL_JUDGMENT: Safe\nFINAL_SCORE: 0.1\nRULE: 1\nREASONING: benign context";
const CUES: &str = "SUMMARY: curated case\nKEY CUES:\n- first cue\n- second cue";

fn item(id: &str, modality: Modality, label: GroundTruthLabel) -> ContentItem {
    let mut i = ContentItem::text_only(id, format!("text for {id}")).with_label(label);
    i.modality = modality;
    match modality {
        Modality::TextOnly => {}
        Modality::ImageOnly => {
            i.text = None;
            i.image_ref = Some(format!("https://img.test/{id}.png"));
        }
        Modality::TextImage => i.image_description = Some(format!("a picture for {id}")),
    }
    i
}

fn six_items() -> Vec<ContentItem> {
    use GroundTruthLabel::*;
    vec![
        item("t1", Modality::TextOnly, Risky),
        item("t2", Modality::TextOnly, Safe),
        item("i1", Modality::ImageOnly, Risky),
        item("i2", Modality::ImageOnly, Safe),
        item("m1", Modality::TextImage, Risky),
        item("m2", Modality::TextImage, Safe),
    ]
}

/// Pushes the calls one item makes; the arbiter says Unsafe iff `unsafe_verdict`.
fn push_item(s: &mut ReplayScriptBuilder, item: &ContentItem, rounds: u32, flags: &AblationFlags, unsafe_verdict: bool) {
    if item.image_ref.is_some() && flags.image_modality_enabled {
        s.push(AgentRole::Preprocessor, "an image", 50, 10);
    }
    if flags.debate_enabled {
        if flags.supporter_enabled {
            s.push(AgentRole::Supporter, "SUMMARY: s", 100, 20);
        }
        for _ in 0..rounds {
            if flags.strict_enabled {
                s.push(AgentRole::StrictDebater, "Risk Score: 0.8", 100, 20);
            }
            if flags.loose_enabled {
                s.push(AgentRole::LooseDebater, "Risk Score: 0.3", 100, 20);
            }
        }
    }
    s.push(AgentRole::Arbiter, if unsafe_verdict { UNSAFE } else { SAFE }, 200, 40);
}

fn pipeline(script: &ReplayScriptBuilder, config: ExperimentConfig, library: Option<Arc<CaseLibrary>>) -> Pipeline {
    let gw = Gateway::new(Arc::new(script.build()), config.models.routes(), RetryPolicy::none(), Arc::new(FixedClock::epoch())).unwrap();
    Pipeline::new(config, Arc::new(gw), Arc::new(PromptSet::builtin()), library).unwrap()
}

fn truthful(i: &ContentItem) -> bool {
    i.label == Some(GroundTruthLabel::Risky)
}

#[tokio::test]
async fn bench_reports_per_modality_and_persists_in_order() {
    let items = six_items();
    let config = ExperimentConfig::default();
    let mut s = ReplayScriptBuilder::new();
    // m2 is misjudged: one false positive in text_image.
    for i in &items {
        push_item(&mut s, i, 2, &config.ablation, truthful(i) || i.id == "m2");
    }
    let p = pipeline(&s, config, None);
    let dir = tempfile::tempdir().unwrap();
    let store = LogStore::open(dir.path()).unwrap();
    let result = run_benchmark(&items, &p, BenchOptions { store: Some(&store), scope: "bench", batch_id: None }).await.unwrap();

    let o = result.metrics.overall;
    assert_eq!((o.tp, o.fp, o.fn_, o.tn), (3, 1, 0, 2));
    assert_eq!(result.metrics.by_modality.len(), 3);
    assert_eq!(result.metrics.by_modality[&Modality::TextOnly].f1, 1.0);
    let mixed = result.metrics.by_modality[&Modality::TextImage];
    assert_eq!((mixed.precision, mixed.recall), (0.5, 1.0));

    assert_eq!(result.cost.calls_by_tier[&Tier::VisionTier], 2);
    assert_eq!(result.cost.calls_by_tier[&Tier::DebaterTier], 6 * 5);
    assert_eq!(result.cost.calls_by_tier[&Tier::ArbiterTier], 6);

    let stored: Vec<String> = store.all().unwrap().into_iter().map(|r| r.item_id).collect();
    assert_eq!(stored, ["t1", "t2", "i1", "i2", "m1", "m2"]);
    let expected_id = run_id_for(p.fingerprint(), "bench", "t1");
    assert!(store.contains(&expected_id));
    assert_eq!(store.configs().unwrap().len(), 1);

    let again = run_benchmark(&items, &p, BenchOptions { store: Some(&store), scope: "bench", batch_id: None }).await;
    assert!(matches!(again, Err(HarnessError::Store(LogStoreError::DuplicateRunId(_)))));
}

#[tokio::test]
async fn call_count_law_across_rounds_and_ablations() {
    let items: Vec<ContentItem> = (0..10).map(|i| item(&format!("x{i}"), Modality::TextOnly, GroundTruthLabel::Safe)).collect();
    let cases: Vec<(u32, &str, u64, u64)> = vec![
        (1, "full", 10 * 3, 10),
        (2, "full", 10 * 5, 10),
        (3, "full", 10 * 7, 10),
        (1, "no-supporter", 10 * 2, 10),
        (2, "no-supporter", 10 * 4, 10),
        (3, "no-supporter", 10 * 6, 10),
        (2, "no-strict", 10 * 3, 10),
        (2, "arbiter-only", 0, 10),
    ];
    for (n, ablation, debater, arbiter) in cases {
        let flags = AblationFlags::default().apply(ablation).unwrap();
        let config = ExperimentConfig { n_rounds: n, ablation: flags, ..Default::default() };
        let mut s = ReplayScriptBuilder::new();
        for i in &items {
            push_item(&mut s, i, n, &flags, false);
        }
        let p = pipeline(&s, config, None);
        let r = run_benchmark(&items, &p, BenchOptions::default()).await.unwrap();
        assert!(r.runs.iter().all(|run| run.status == RunStatus::Completed), "{ablation} N={n}");
        assert_eq!(r.cost.calls_by_tier[&Tier::DebaterTier], debater, "{ablation} N={n}");
        assert_eq!(r.cost.calls_by_tier[&Tier::ArbiterTier], arbiter, "{ablation} N={n}");
    }
}

#[tokio::test]
async fn sweep_runs_one_benchmark_per_n() {
    let items = six_items();
    let config = ExperimentConfig::default();
    let mut s = ReplayScriptBuilder::new();
    for n in [1, 2] {
        for i in &items {
            push_item(&mut s, i, n, &config.ablation, truthful(i));
        }
    }
    let p = pipeline(&s, config, None);
    let dir = tempfile::tempdir().unwrap();
    let store = LogStore::open(dir.path()).unwrap();
    let rows = rounds_sweep(&items, &p, &[1, 2], Some(&store)).await.unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].debater_calls, rows[1].debater_calls), (6 * 3, 6 * 5));
    assert!(rows.iter().all(|r| r.metrics.f1 == 1.0 && r.arbiter_calls == 6));
    assert_eq!(rows[0].cost_delta_pct, 0.0);
    assert_eq!(store.len(), 12);
    assert_eq!(store.configs().unwrap().len(), 2);
    assert!(rounds_sweep(&items, &p, &[0], None).await.is_err());
}

#[tokio::test]
async fn sequential_grows_the_library_between_batches() {
    let items = six_items();
    let config = ExperimentConfig::default();
    let batches = stratified_batches(&items, 2, config.seed).unwrap();
    let mut s = ReplayScriptBuilder::new();
    // Control arm misses every risky item; the continuous arm catches them.
    for b in &batches {
        for i in b {
            push_item(&mut s, i, 2, &config.ablation, false);
        }
    }
    for b in &batches {
        for i in b {
            push_item(&mut s, i, 2, &config.ablation, truthful(i));
        }
        for _ in b {
            s.push(AgentRole::Curator, CUES, 80, 20);
        }
    }
    let p = pipeline(&s, config, None);
    let dir = tempfile::tempdir().unwrap();
    let control = LogStore::open(dir.path().join("zero")).unwrap();
    let continuous = LogStore::open(dir.path().join("cont")).unwrap();
    let library = Arc::new(CaseLibrary::open(dir.path().join("library.jsonl")).unwrap());
    let result = sequential_experiment(
        &items,
        2,
        &p,
        library.clone(),
        SequentialStores { control: Some(&control), continuous: Some(&continuous) },
    )
    .await
    .unwrap();

    let sizes: Vec<(usize, usize)> = result.rows.iter().map(|r| (r.library_size_before, r.library_size_after)).collect();
    assert_eq!(sizes, [(0, 3), (3, 6)]);
    assert_eq!(library.len(), 6);
    for row in &result.rows {
        assert_eq!(row.size, 3);
        assert_eq!(row.zero_shot_f1, 0.0);
        assert_eq!(row.continuous_f1, 1.0);
        assert_eq!(row.delta, 1.0);
    }
    assert_eq!(result.curation_cost.calls(Tier::ArbiterTier), 6);
    assert_eq!((control.len(), continuous.len()), (6, 6));
    let b2 = continuous.all().unwrap().into_iter().filter(|r| r.batch_id.as_deref() == Some("B2")).collect::<Vec<_>>();
    assert!(b2.iter().all(|r| !r.briefing.as_ref().unwrap().cold_start));
    assert!(control.all().unwrap().iter().all(|r| r.briefing.as_ref().unwrap().cold_start));
}
