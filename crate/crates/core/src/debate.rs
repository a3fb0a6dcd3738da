//! The N-round exchange between the Strict and Loose debaters.
//!
//! Rounds are simultaneous: in round `r` each debater answers the opponent's
//! round `r-1` argument, so speaking order within a round never leaks one
//! side's current-round argument to the other.

use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::model::{ActiveDebaters, AgentRole, DebateTranscript, DebateTurn, RiskScore, ScoreSource, TurnOrder};
use crate::preprocessor::StandardizedInput;
use crate::prompts::{PromptSet, RoundKind};
use crate::provider::{CallLog, Gateway, GatewayError};

pub const DEFAULT_ROUNDS: u32 = 2;
/// Fills `{opponent_last}` when only one debater is active.
pub const NO_OPPONENT: &str =
    "[NO OPPOSING ARGUMENT: single-debater configuration, refine your own previous assessment]";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DebateConfig {
    rounds: u32,
    pub turn_order: TurnOrder,
    pub active: ActiveDebaters,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("debate rounds must be >= 1")]
pub struct InvalidRounds;

impl DebateConfig {
    pub fn new(rounds: u32, turn_order: TurnOrder, active: ActiveDebaters) -> Result<Self, InvalidRounds> {
        if rounds == 0 {
            return Err(InvalidRounds);
        }
        Ok(DebateConfig { rounds, turn_order, active })
    }

    pub fn rounds(&self) -> u32 {
        self.rounds
    }
}

impl Default for DebateConfig {
    fn default() -> Self {
        DebateConfig { rounds: DEFAULT_ROUNDS, turn_order: TurnOrder::default(), active: ActiveDebaters::Both }
    }
}

static SCORE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)risk[ \t]*score[\s:*=]*(-?\d+(?:\.\d+)?|-?\.\d+)").unwrap());

/// The number after the last "Risk Score" marker, if any. No range check.
pub fn extract_score(text: &str) -> Option<f64> {
    SCORE_RE
        .captures_iter(text)
        .last()
        .and_then(|c| c.get(1))
        .and_then(|m| m.as_str().parse().ok())
}

/// Total: unparseable or out-of-range scores fall back to 0.5 in round 1 and
/// to `previous` afterwards.
pub fn resolve_score(text: &str, previous: Option<RiskScore>) -> (RiskScore, ScoreSource) {
    if let Some(score) = extract_score(text).and_then(|v| RiskScore::new(v).ok()) {
        return (score, ScoreSource::Parsed);
    }
    match previous {
        Some(prev) => (prev, ScoreSource::FallbackPrevious),
        None => (RiskScore::NEUTRAL, ScoreSource::FallbackDefault),
    }
}

fn own_history(turns: &[DebateTurn], role: AgentRole) -> String {
    turns
        .iter()
        .filter(|t| t.role == role)
        .map(|t| format!("[Round {}, Risk Score {:.2}]\n{}", t.round, t.score.value(), t.argument.trim()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Runs the debate. A provider failure aborts it.
///
/// `briefing` is the already-rendered Supporter briefing text.
pub async fn run_debate(
    input: &StandardizedInput,
    briefing: &str,
    config: &DebateConfig,
    gateway: &Gateway,
    prompts: &PromptSet,
    log: &mut CallLog,
) -> Result<DebateTranscript, GatewayError> {
    let speakers = config.active.roles(config.turn_order);
    let mut turns: Vec<DebateTurn> = Vec::with_capacity(speakers.len() * config.rounds as usize);

    for round in 1..=config.rounds {
        let kind = RoundKind::for_round(round);
        let previous_round: Vec<DebateTurn> = turns.iter().filter(|t| t.round + 1 == round).cloned().collect();
        for &role in &speakers {
            let template = prompts.debater(role, input.modality, kind);
            let round_str = round.to_string();
            let prompt = match kind {
                RoundKind::Opening => template.render(&[
                    ("input", &input.text),
                    ("briefing", briefing),
                    ("round", &round_str),
                ]),
                RoundKind::Rebuttal => {
                    let opponent = role.opponent().expect("debater has an opponent");
                    let opponent_last = previous_round
                        .iter()
                        .find(|t| t.role == opponent)
                        .map(|t| t.argument.trim().to_string())
                        .unwrap_or_else(|| NO_OPPONENT.to_string());
                    let own_last = own_history(&turns, role);
                    template.render(&[
                        ("input", &input.text),
                        ("briefing", briefing),
                        ("round", &round_str),
                        ("own_last", &own_last),
                        ("opponent_last", &opponent_last),
                    ])
                }
            }
            .expect("debater templates validated at load");

            let exchange = gateway.complete(role, &prompt, log).await?;
            let previous = turns.iter().rev().find(|t| t.role == role).map(|t| t.score);
            let (score, score_source) = resolve_score(&exchange.response, previous);
            if score_source != ScoreSource::Parsed {
                tracing::debug!(%role, round, ?score_source, "risk score fallback");
            }
            turns.push(DebateTurn { role, round, argument: exchange.response, score, score_source });
        }
    }
    Ok(DebateTranscript::new(turns, config.rounds, config.turn_order, config.active)
        .expect("debate loop emits a well-formed transcript"))
}

pub fn role_title(role: AgentRole) -> &'static str {
    match role {
        AgentRole::StrictDebater => "Strict Debater",
        AgentRole::LooseDebater => "Loose Debater",
        AgentRole::Preprocessor => "Preprocessor",
        AgentRole::Supporter => "Supporter",
        AgentRole::Arbiter => "Arbiter",
        AgentRole::Curator => "Curator",
    }
}

pub fn render_transcript(transcript: &DebateTranscript) -> String {
    transcript
        .turns()
        .iter()
        .map(|t| {
            format!(
                "--- Round {} | {} | Risk Score {:.2} ---\n{}",
                t.round,
                role_title(t.role),
                t.score.value(),
                t.argument.trim()
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// One line per active debater, e.g. `Strict Debater: 0.85 -> 0.90`.
pub fn render_trajectories(transcript: &DebateTranscript) -> String {
    transcript
        .active_debaters()
        .roles(TurnOrder::StrictFirst)
        .into_iter()
        .map(|role| {
            let scores: Vec<String> = transcript.trajectory(role).iter().map(|s| format!("{s:.2}")).collect();
            format!("{}: {}", role_title(role), scores.join(" -> "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}
