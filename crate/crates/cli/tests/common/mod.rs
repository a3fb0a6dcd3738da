#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aetheria_core::model::{AgentRole, ContentItem, GroundTruthLabel, Modality};
use aetheria_core::provider::ReplayScriptBuilder;

pub const UNSAFE: &str = "FINAL_JUDGMENT: Unsafe\nFINAL_SCORE: 0.9\nRULE: 2\nREASONING: risk confirmed";
pub const SAFE: &str = "FINAL_JUDGMENT: Safe\nFINAL_SCORE: 0.1\nRULE: 1\nREASONING: benign context";
pub const CUES: &str = "SUMMARY: curated case\nKEY CUES:\n- first cue\n- second cue";

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn aetheria(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aetheria")).current_dir(cwd).args(args).output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn item(id: &str, modality: Modality, label: GroundTruthLabel) -> ContentItem {
    let mut i = ContentItem::text_only(id, format!("text for {id}")).with_label(label);
    i.modality = modality;
    match modality {
        Modality::TextOnly => {}
        Modality::ImageOnly => {
            i.text = None;
            i.image_description = Some(format!("a picture for {id}"));
        }
        Modality::TextImage => i.image_description = Some(format!("a picture for {id}")),
    }
    i
}

pub fn labeled_items(n: usize) -> Vec<ContentItem> {
    (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { GroundTruthLabel::Risky } else { GroundTruthLabel::Safe };
            item(&format!("x{i:02}"), Modality::ALL[i % 3], label)
        })
        .collect()
}

/// Appends one full-pipeline item: supporter, `rounds` debate rounds, arbiter.
pub fn push_item(s: &mut ReplayScriptBuilder, rounds: u32, unsafe_verdict: bool) {
    s.push(AgentRole::Supporter, "SUMMARY: s", 100, 20);
    for _ in 0..rounds {
        s.push(AgentRole::StrictDebater, "Risk Score: 0.8", 100, 20);
        s.push(AgentRole::LooseDebater, "Risk Score: 0.3", 100, 20);
    }
    s.push(AgentRole::Arbiter, if unsafe_verdict { UNSAFE } else { SAFE }, 200, 40);
}

pub fn write_dataset(path: &Path, items: &[ContentItem]) {
    let text: String = items.iter().map(|i| serde_json::to_string(i).unwrap() + "\n").collect();
    std::fs::write(path, text).unwrap();
}
