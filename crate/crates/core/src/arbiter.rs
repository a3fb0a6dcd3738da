//! Final adjudication under the three-rule protocol.
//!
//! Response grammar, one field per line, header names case-insensitive and
//! `FINAL_JUDGMENT` also accepted as `Final Judgment`:
//!
//! ```text
//! FINAL_JUDGMENT: Safe | Unsafe      required, authoritative
//! FINAL_SCORE: <0..1>                optional
//! RULE: 1 | 2 | 3                    optional, "Rule 2" also accepted
//! REASONING: <text, may continue on following lines>
//! EVIDENCE:
//! - <citation>
//! ```

use thiserror::Error;

use crate::debate::{render_trajectories, render_transcript};
use crate::model::{AgentRole, AuditReport, DebateTranscript, RiskScore, RuleApplied, Verdict};
use crate::preprocessor::StandardizedInput;
use crate::prompts::PromptSet;
use crate::provider::{CallLog, Gateway, GatewayError};
use crate::sections;

/// Transcript text in arbiter-only mode.
pub const NO_DEBATE: &str = "[NO DEBATE: arbiter-only configuration, judge the content and briefing directly]";
pub const NO_REASONING: &str = "(the arbiter gave no reasoning)";

const HEADERS: &[&str] = &["FINAL_JUDGMENT", "FINAL_SCORE", "RULE", "REASONING", "EVIDENCE"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid arbiter output: {reason}")]
pub struct InvalidArbiterOutput {
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum ArbiterError {
    /// The one arbiter call was made and billed; its payload is kept.
    #[error("{source}")]
    Invalid { source: InvalidArbiterOutput, raw: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

fn invalid(reason: impl Into<String>) -> InvalidArbiterOutput {
    InvalidArbiterOutput { reason: reason.into() }
}

fn words(value: &str) -> impl Iterator<Item = String> + '_ {
    value
        .split(|c: char| !c.is_ascii_alphanumeric() && c != '-')
        .filter(|w| !w.is_empty())
        .map(|w| w.to_ascii_lowercase())
}

fn parse_judgment(value: &str) -> Option<Verdict> {
    let mut found = None;
    for w in words(value) {
        let v = match w.as_str() {
            "safe" => Verdict::Safe,
            "unsafe" | "not-safe" => Verdict::Unsafe,
            _ => continue,
        };
        if found.is_some_and(|f| f != v) {
            return None;
        }
        found = Some(v);
    }
    found
}

fn parse_rule(value: &str) -> RuleApplied {
    if let Some(d) = value.chars().find(|c| c.is_ascii_digit()) {
        return match d {
            '1' => RuleApplied::Rule1Exoneration,
            '2' => RuleApplied::Rule2RiskConfirmation,
            '3' => RuleApplied::Rule3DefaultSafe,
            _ => RuleApplied::Unstated,
        };
    }
    let lower = value.to_ascii_lowercase();
    if lower.contains("exoneration") {
        RuleApplied::Rule1Exoneration
    } else if lower.contains("confirmation") {
        RuleApplied::Rule2RiskConfirmation
    } else if lower.contains("default") {
        RuleApplied::Rule3DefaultSafe
    } else {
        RuleApplied::Unstated
    }
}

fn parse_score(value: &str) -> Option<RiskScore> {
    let token = value
        .split(|c: char| c.is_whitespace() || c == '/' || c == ',' || c == '(' || c == ')')
        .find(|t| !t.is_empty())?;
    token.trim_end_matches('.').parse::<f64>().ok().and_then(|v| RiskScore::new(v).ok())
}

/// Pure parse of an arbiter response.
///
/// When the score is missing or unusable it is taken from the last strict
/// score, then the last loose score, then 0.5, and the substitution is noted
/// in the reasoning.
pub fn parse_arbiter_output(
    raw: &str,
    transcript: Option<&DebateTranscript>,
) -> Result<AuditReport, InvalidArbiterOutput> {
    let mut verdicts = Vec::new();
    for line in raw.lines() {
        if let Some(("FINAL_JUDGMENT", value)) = sections::match_header(line, HEADERS) {
            verdicts.push(parse_judgment(value).ok_or_else(|| invalid(format!("unrecognized judgment `{}`", value.trim())))?);
        }
    }
    let verdict = match verdicts.split_first() {
        None => return Err(invalid("no FINAL_JUDGMENT line")),
        Some((first, rest)) if rest.iter().any(|v| v != first) => return Err(invalid("conflicting FINAL_JUDGMENT lines")),
        Some((first, _)) => *first,
    };

    let parsed = sections::split(raw, HEADERS);
    let field = |k: &str| parsed.get(k).map(String::as_str).unwrap_or_default();
    let mut reasoning = field("REASONING").to_string();

    let final_score = match parse_score(field("FINAL_SCORE")) {
        Some(score) => score,
        None => {
            let derived = transcript.and_then(|t| {
                t.last_score(AgentRole::StrictDebater)
                    .map(|s| (s, "last Strict Debater score"))
                    .or_else(|| t.last_score(AgentRole::LooseDebater).map(|s| (s, "last Loose Debater score")))
            });
            let (score, origin) = derived.unwrap_or((RiskScore::NEUTRAL, "neutral default"));
            if !reasoning.is_empty() {
                reasoning.push('\n');
            }
            reasoning.push_str(&format!("[final score missing from arbiter output; derived from {origin}]"));
            score
        }
    };
    if reasoning.trim().is_empty() {
        reasoning = NO_REASONING.to_string();
    }

    let rule_applied = parsed.get("RULE").map(|r| parse_rule(r)).unwrap_or(RuleApplied::Unstated);
    let evidence_body = field("EVIDENCE");
    let mut cited_evidence = sections::bullets(evidence_body);
    if cited_evidence.is_empty() && !evidence_body.is_empty() {
        cited_evidence = evidence_body.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    }
    Ok(AuditReport { verdict, final_score, rule_applied, reasoning, cited_evidence })
}

/// `transcript = None` renders arbiter-only mode.
pub fn build_prompt(
    input: &StandardizedInput,
    briefing: &str,
    transcript: Option<&DebateTranscript>,
    prompts: &PromptSet,
) -> String {
    let (transcript_text, trajectories) = match transcript {
        Some(t) => (render_transcript(t), render_trajectories(t)),
        None => (NO_DEBATE.to_string(), "(none)".to_string()),
    };
    prompts
        .arbiter()
        .render(&[
            ("input", &input.text),
            ("briefing", briefing),
            ("transcript", &transcript_text),
            ("trajectories", &trajectories),
        ])
        .expect("arbiter template validated at load")
}

/// Makes exactly one arbiter call, whether or not its output parses.
pub async fn adjudicate(
    input: &StandardizedInput,
    briefing: &str,
    transcript: Option<&DebateTranscript>,
    gateway: &Gateway,
    prompts: &PromptSet,
    log: &mut CallLog,
) -> Result<AuditReport, ArbiterError> {
    let prompt = build_prompt(input, briefing, transcript, prompts);
    let exchange = gateway.complete(AgentRole::Arbiter, &prompt, log).await?;
    parse_arbiter_output(&exchange.response, transcript)
        .map_err(|source| ArbiterError::Invalid { source, raw: exchange.response })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActiveDebaters, DebateTurn, ScoreSource, TurnOrder};

    fn transcript(strict: &[f64], loose: &[f64]) -> DebateTranscript {
        let active = ActiveDebaters::from_flags(!strict.is_empty(), !loose.is_empty()).unwrap();
        let rounds = strict.len().max(loose.len());
        let mut turns = Vec::new();
        for r in 0..rounds {
            for (role, scores) in [(AgentRole::StrictDebater, strict), (AgentRole::LooseDebater, loose)] {
                if let Some(s) = scores.get(r) {
                    turns.push(DebateTurn {
                        role,
                        round: r as u32 + 1,
                        argument: "arg".into(),
                        score: RiskScore::new(*s).unwrap(),
                        score_source: ScoreSource::Parsed,
                    });
                }
            }
        }
        DebateTranscript::new(turns, rounds as u32, TurnOrder::StrictFirst, active).unwrap()
    }

    #[test]
    fn full_block() {
        let raw = "FINAL_JUDGMENT: Safe\nFINAL_SCORE: 0.10\nRULE: 3\nREASONING: ambiguous, no concrete harm\nEVIDENCE:\n- loose cited education\n- no instructions";
        let r = parse_arbiter_output(raw, None).unwrap();
        assert_eq!(r.verdict, Verdict::Safe);
        assert_eq!(r.final_score.value(), 0.10);
        assert_eq!(r.rule_applied, RuleApplied::Rule3DefaultSafe);
        assert_eq!(r.reasoning, "ambiguous, no concrete harm");
        assert_eq!(r.cited_evidence, vec!["loose cited education", "no instructions"]);
    }

    #[test]
    fn judgment_only_derives_score_from_strict() {
        let t = transcript(&[0.7, 0.8], &[0.3, 0.2]);
        let r = parse_arbiter_output("FINAL_JUDGMENT: Unsafe", Some(&t)).unwrap();
        assert_eq!(r.verdict, Verdict::Unsafe);
        assert_eq!(r.final_score.value(), 0.8);
        assert_eq!(r.rule_applied, RuleApplied::Unstated);
        assert!(r.reasoning.contains("derived from last Strict Debater score"));
    }

    #[test]
    fn derived_score_falls_back_to_loose_then_neutral() {
        let t = transcript(&[], &[0.3, 0.25]);
        assert_eq!(parse_arbiter_output("FINAL_JUDGMENT: Safe", Some(&t)).unwrap().final_score.value(), 0.25);
        assert_eq!(parse_arbiter_output("FINAL_JUDGMENT: Safe", None).unwrap().final_score, RiskScore::NEUTRAL);
    }

    #[test]
    fn invalid_judgments() {
        for raw in ["FINAL_JUDGMENT: maybe", "I think it is fine", "", "FINAL_JUDGMENT: Safe or Unsafe",
                    "FINAL_JUDGMENT: Safe\nFINAL_JUDGMENT: Unsafe"] {
            assert!(parse_arbiter_output(raw, None).is_err(), "{raw:?}");
        }
    }

    #[test]
    fn tolerant_header_forms() {
        let raw = "**Final Judgment:** UNSAFE\nFinal_Score: 0.95 (high)\nRule: Rule 2 (Risk Confirmation)\nReasoning: Physical safety priority.\nit continues";
        let r = parse_arbiter_output(raw, None).unwrap();
        assert_eq!(r.verdict, Verdict::Unsafe);
        assert_eq!(r.final_score.value(), 0.95);
        assert_eq!(r.rule_applied, RuleApplied::Rule2RiskConfirmation);
        assert_eq!(r.reasoning, "Physical safety priority.\nit continues");
    }

    #[test]
    fn out_of_range_score_is_derived_not_clamped() {
        let r = parse_arbiter_output("FINAL_JUDGMENT: Unsafe\nFINAL_SCORE: 4", None).unwrap();
        assert_eq!(r.final_score, RiskScore::NEUTRAL);
    }

    #[test]
    fn verdict_is_authoritative_over_score() {
        let r = parse_arbiter_output("FINAL_JUDGMENT: Safe\nFINAL_SCORE: 0.99\nRULE: 2", None).unwrap();
        assert_eq!(r.verdict, Verdict::Safe);
        assert_eq!(r.rule_applied, RuleApplied::Rule2RiskConfirmation);
    }

    #[test]
    fn prompt_lists_rules_in_priority_order() {
        let input = StandardizedInput { text: "x".into(), modality: crate::model::Modality::TextOnly, placeholder_used: false };
        let p = build_prompt(&input, "b", None, &PromptSet::builtin());
        let pos = |s: &str| p.find(s).unwrap();
        assert!(pos("Rule 1:") < pos("Rule 2:") && pos("Rule 2:") < pos("Rule 3:"));
        assert!(p.contains(NO_DEBATE));
        assert!(p.contains("FINAL_JUDGMENT: Safe or Unsafe"));
    }
}
