//! Grounding briefing: summary, Top-K precedents, differences and patterns.

use crate::library::CaseLibrary;
use crate::model::{AgentRole, CaseRecord, Precedent, SupporterBriefing};
use crate::preprocessor::StandardizedInput;
use crate::prompts::PromptSet;
use crate::provider::{CallLog, Gateway, GatewayError};
use crate::sections;

pub const NO_PRECEDENTS: &str = "no precedents available";
/// Per-precedent excerpt cap, in characters.
pub const EXCERPT_CHARS: usize = 400;
/// What debaters and the Arbiter see when the Supporter is ablated.
pub const NO_BRIEFING: &str = "[NO SUPPORTER BRIEFING: the Supporter is disabled in this configuration]";

fn precedent_block(rank: usize, record: &CaseRecord, similarity: f64) -> String {
    format!(
        "[Precedent {rank}] case_id={} similarity={similarity:.4} verdict={}\nKey cues: {}\nSummary: {}",
        record.case_id,
        record.verdict,
        if record.key_cues.is_empty() { "(none)".to_string() } else { record.key_cues.join("; ") },
        sections::truncate_chars(&record.summary, EXCERPT_CHARS),
    )
}

/// Builds the briefing with exactly one Supporter call.
///
/// `library = None` means retrieval is disabled; an empty library is never
/// queried. Both cases produce a cold-start briefing.
pub async fn build_briefing(
    input: &StandardizedInput,
    k: usize,
    library: Option<&CaseLibrary>,
    gateway: &Gateway,
    prompts: &PromptSet,
    log: &mut CallLog,
) -> Result<SupporterBriefing, GatewayError> {
    let hits = match library {
        Some(lib) if !lib.is_empty() && k > 0 => lib.retrieve_top_k(&input.text, k),
        _ => Vec::new(),
    };
    let precedents_text = if hits.is_empty() {
        format!("(none: {NO_PRECEDENTS})")
    } else {
        hits.iter()
            .enumerate()
            .map(|(i, (rec, sim))| precedent_block(i + 1, rec, *sim))
            .collect::<Vec<_>>()
            .join("\n\n")
    };
    let prompt = prompts
        .supporter()
        .render(&[("input", &input.text), ("precedents", &precedents_text)])
        .expect("supporter template validated at load");
    let exchange = gateway.complete(AgentRole::Supporter, &prompt, log).await?;

    let parsed = sections::split(&exchange.response, &["SUMMARY", "DIFFERENCES", "PATTERNS"]);
    let input_summary = parsed
        .get("SUMMARY")
        .filter(|s| !s.is_empty())
        .cloned()
        .unwrap_or_else(|| exchange.response.trim().to_string());

    let cold_start = hits.is_empty();
    let (differences, patterns) = if cold_start {
        (NO_PRECEDENTS.to_string(), NO_PRECEDENTS.to_string())
    } else {
        let pick = |key| parsed.get(key).filter(|s| !s.is_empty()).cloned().unwrap_or_default();
        (pick("DIFFERENCES"), pick("PATTERNS"))
    };
    let precedents = hits
        .into_iter()
        .map(|(rec, similarity)| Precedent {
            excerpt: sections::truncate_chars(&rec.summary, EXCERPT_CHARS),
            case_id: rec.case_id,
            similarity,
        })
        .collect();
    Ok(SupporterBriefing { input_summary, precedents, differences, patterns, cold_start })
}

/// Renders a briefing for inclusion in debater and arbiter prompts.
pub fn render_briefing(briefing: Option<&SupporterBriefing>) -> String {
    let Some(b) = briefing else {
        return NO_BRIEFING.to_string();
    };
    let mut out = format!("Summary: {}\n", b.input_summary);
    if b.precedents.is_empty() {
        out.push_str("Precedents: none (cold start, empty or disabled case library)\n");
    } else {
        out.push_str("Precedents:\n");
        for p in &b.precedents {
            out.push_str(&format!("- [{}] (similarity {:.2}) {}\n", p.case_id, p.similarity, p.excerpt));
        }
    }
    out.push_str(&format!("Differences: {}\nPatterns: {}", b.differences, b.patterns));
    out
}
