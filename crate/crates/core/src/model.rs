//! Domain types shared by every stage of the moderation pipeline.
//!
//! Everything here is a plain value: immutable once built, `Send + Sync`, and
//! serialized field-for-field into the JSON Lines record format used by the
//! log store, the case library and the dataset files.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("risk score {0} outside [0.0, 1.0]")]
    ScoreOutOfRange(f64),
    #[error("invalid transcript: {0}")]
    Transcript(String),
    #[error("invalid briefing: {0}")]
    Briefing(String),
    #[error("invalid case record: {0}")]
    CaseRecord(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    TextOnly,
    ImageOnly,
    TextImage,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::TextOnly, Modality::ImageOnly, Modality::TextImage];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::TextOnly => "text_only",
            Modality::ImageOnly => "image_only",
            Modality::TextImage => "text_image",
        }
    }

    pub fn has_image(self) -> bool {
        !matches!(self, Modality::TextOnly)
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Binary ground truth. `Risky` is the positive class for metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruthLabel {
    Safe,
    Risky,
}

impl GroundTruthLabel {
    pub fn is_positive(self) -> bool {
        matches!(self, GroundTruthLabel::Risky)
    }

    /// The verdict a correct system would have produced for this label.
    pub fn expected_verdict(self) -> Verdict {
        match self {
            GroundTruthLabel::Safe => Verdict::Safe,
            GroundTruthLabel::Risky => Verdict::Unsafe,
        }
    }
}

/// Arbiter verdict. `Unsafe` is the predicted-positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Safe,
    Unsafe,
}

impl Verdict {
    pub fn is_positive(self) -> bool {
        matches!(self, Verdict::Unsafe)
    }

    pub fn as_label(self) -> GroundTruthLabel {
        match self {
            Verdict::Safe => GroundTruthLabel::Safe,
            Verdict::Unsafe => GroundTruthLabel::Risky,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Safe => "Safe",
            Verdict::Unsafe => "Unsafe",
        })
    }
}

impl fmt::Display for GroundTruthLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroundTruthLabel::Safe => "Safe",
            GroundTruthLabel::Risky => "Risky",
        })
    }
}

/// Confusion-matrix cell of one prediction against its label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Tp,
    Fp,
    Fn,
    Tn,
}

impl Outcome {
    pub fn of(verdict: Verdict, label: GroundTruthLabel) -> Self {
        match (verdict.is_positive(), label.is_positive()) {
            (true, true) => Outcome::Tp,
            (true, false) => Outcome::Fp,
            (false, true) => Outcome::Fn,
            (false, false) => Outcome::Tn,
        }
    }

    pub fn is_failure(self) -> bool {
        matches!(self, Outcome::Fp | Outcome::Fn)
    }

    pub fn describe(self) -> &'static str {
        match self {
            Outcome::Tp => "true positive (correctly flagged)",
            Outcome::Fp => "false positive (safe content flagged as unsafe)",
            Outcome::Fn => "false negative (risky content missed)",
            Outcome::Tn => "true negative (correctly passed)",
        }
    }
}

impl std::str::FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "TP" => Ok(Outcome::Tp),
            "FP" => Ok(Outcome::Fp),
            "FN" => Ok(Outcome::Fn),
            "TN" => Ok(Outcome::Tn),
            other => Err(format!("unknown outcome `{other}` (TP|FP|FN|TN)")),
        }
    }
}

/// A risk score in `[0.0, 1.0]`, where 1.0 means extreme risk.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RiskScore(f64);

impl RiskScore {
    /// Score applied when a first-round debater response carries no usable score.
    pub const NEUTRAL: RiskScore = RiskScore(0.5);

    pub fn new(value: f64) -> Result<Self, ModelError> {
        if (0.0..=1.0).contains(&value) {
            Ok(RiskScore(value))
        } else {
            Err(ModelError::ScoreOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for RiskScore {
    type Error = ModelError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        RiskScore::new(value)
    }
}

impl From<RiskScore> for f64 {
    fn from(score: RiskScore) -> f64 {
        score.0
    }
}

impl fmt::Display for RiskScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Preprocessor,
    Supporter,
    StrictDebater,
    LooseDebater,
    Arbiter,
    Curator,
}

impl AgentRole {
    pub const ALL: [AgentRole; 6] = [
        AgentRole::Preprocessor,
        AgentRole::Supporter,
        AgentRole::StrictDebater,
        AgentRole::LooseDebater,
        AgentRole::Arbiter,
        AgentRole::Curator,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentRole::Preprocessor => "preprocessor",
            AgentRole::Supporter => "supporter",
            AgentRole::StrictDebater => "strict_debater",
            AgentRole::LooseDebater => "loose_debater",
            AgentRole::Arbiter => "arbiter",
            AgentRole::Curator => "curator",
        }
    }

    pub fn is_debater(self) -> bool {
        matches!(self, AgentRole::StrictDebater | AgentRole::LooseDebater)
    }

    /// The billing tier this role is routed to unless configured otherwise.
    pub fn default_tier(self) -> Tier {
        match self {
            AgentRole::Preprocessor => Tier::VisionTier,
            AgentRole::Supporter | AgentRole::StrictDebater | AgentRole::LooseDebater => {
                Tier::DebaterTier
            }
            AgentRole::Arbiter | AgentRole::Curator => Tier::ArbiterTier,
        }
    }

    pub fn opponent(self) -> Option<AgentRole> {
        match self {
            AgentRole::StrictDebater => Some(AgentRole::LooseDebater),
            AgentRole::LooseDebater => Some(AgentRole::StrictDebater),
            _ => None,
        }
    }
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AgentRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentRole::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown agent role `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    DebaterTier,
    ArbiterTier,
    VisionTier,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::DebaterTier, Tier::ArbiterTier, Tier::VisionTier];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::DebaterTier => "debater_tier",
            Tier::ArbiterTier => "arbiter_tier",
            Tier::VisionTier => "vision_tier",
        }
    }
}

/// One moderation input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentItem {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
    /// Precomputed image description; when present no vision call is made.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_description: Option<String>,
    pub modality: Modality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<GroundTruthLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

/// The first modality invariant an item violates.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("id required")]
    IdRequired,
    #[error("text required")]
    TextRequired,
    #[error("text not allowed for image_only items")]
    TextNotAllowed,
    #[error("image_ref or image_description required")]
    ImageRequired,
    #[error("image fields not allowed for text_only items")]
    ImageNotAllowed,
}

impl Violation {
    /// Field the violation refers to, for request diagnostics.
    pub fn field(&self) -> &'static str {
        match self {
            Violation::IdRequired => "id",
            Violation::TextRequired | Violation::TextNotAllowed => "text",
            Violation::ImageRequired | Violation::ImageNotAllowed => "image_ref",
        }
    }
}

pub type ValidationResult = Result<(), Violation>;

fn present(field: &Option<String>) -> bool {
    field.as_deref().is_some_and(|s| !s.trim().is_empty())
}

impl ContentItem {
    pub fn text_only(id: impl Into<String>, text: impl Into<String>) -> Self {
        ContentItem {
            id: id.into(),
            text: Some(text.into()),
            image_ref: None,
            image_description: None,
            modality: Modality::TextOnly,
            label: None,
            category: None,
        }
    }

    pub fn with_label(mut self, label: GroundTruthLabel) -> Self {
        self.label = Some(label);
        self
    }

    /// Checks the modality invariants. Empty or whitespace-only strings count as absent.
    pub fn validate(&self) -> ValidationResult {
        if self.id.trim().is_empty() {
            return Err(Violation::IdRequired);
        }
        let has_text = present(&self.text);
        let has_image = present(&self.image_ref) || present(&self.image_description);
        match self.modality {
            Modality::TextOnly => {
                if !has_text {
                    Err(Violation::TextRequired)
                } else if self.image_ref.is_some() || self.image_description.is_some() {
                    Err(Violation::ImageNotAllowed)
                } else {
                    Ok(())
                }
            }
            Modality::ImageOnly => {
                if self.text.is_some() {
                    Err(Violation::TextNotAllowed)
                } else if !has_image {
                    Err(Violation::ImageRequired)
                } else {
                    Ok(())
                }
            }
            Modality::TextImage => {
                if !has_text {
                    Err(Violation::TextRequired)
                } else if !has_image {
                    Err(Violation::ImageRequired)
                } else {
                    Ok(())
                }
            }
        }
    }
}

pub fn validate_item(item: &ContentItem) -> ValidationResult {
    item.validate()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSource {
    Parsed,
    FallbackDefault,
    FallbackPrevious,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateTurn {
    pub role: AgentRole,
    pub round: u32,
    pub argument: String,
    pub score: RiskScore,
    pub score_source: ScoreSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnOrder {
    #[default]
    StrictFirst,
    LooseFirst,
}

impl TurnOrder {
    pub fn roles(self) -> [AgentRole; 2] {
        match self {
            TurnOrder::StrictFirst => [AgentRole::StrictDebater, AgentRole::LooseDebater],
            TurnOrder::LooseFirst => [AgentRole::LooseDebater, AgentRole::StrictDebater],
        }
    }
}

impl std::str::FromStr for TurnOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "strict_first" => Ok(TurnOrder::StrictFirst),
            "loose_first" => Ok(TurnOrder::LooseFirst),
            other => Err(format!("unknown turn order `{other}` (strict-first|loose-first)")),
        }
    }
}

/// Which debaters take part in a debate. Anything but `Both` is an ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveDebaters {
    #[default]
    Both,
    StrictOnly,
    LooseOnly,
}

impl ActiveDebaters {
    pub fn from_flags(strict: bool, loose: bool) -> Option<Self> {
        match (strict, loose) {
            (true, true) => Some(ActiveDebaters::Both),
            (true, false) => Some(ActiveDebaters::StrictOnly),
            (false, true) => Some(ActiveDebaters::LooseOnly),
            (false, false) => None,
        }
    }

    /// Speaking order within one round.
    pub fn roles(self, order: TurnOrder) -> Vec<AgentRole> {
        match self {
            ActiveDebaters::Both => order.roles().to_vec(),
            ActiveDebaters::StrictOnly => vec![AgentRole::StrictDebater],
            ActiveDebaters::LooseOnly => vec![AgentRole::LooseDebater],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawTranscript {
    turns: Vec<DebateTurn>,
    rounds: u32,
    turn_order: TurnOrder,
    #[serde(default)]
    active_debaters: ActiveDebaters,
}

/// Ordered debate turns. Construction checks the round structure, so a
/// transcript with a missing or out-of-order turn cannot exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTranscript")]
pub struct DebateTranscript {
    turns: Vec<DebateTurn>,
    rounds: u32,
    turn_order: TurnOrder,
    active_debaters: ActiveDebaters,
}

impl TryFrom<RawTranscript> for DebateTranscript {
    type Error = ModelError;

    fn try_from(raw: RawTranscript) -> Result<Self, Self::Error> {
        DebateTranscript::new(raw.turns, raw.rounds, raw.turn_order, raw.active_debaters)
    }
}

impl DebateTranscript {
    pub fn new(
        turns: Vec<DebateTurn>,
        rounds: u32,
        turn_order: TurnOrder,
        active_debaters: ActiveDebaters,
    ) -> Result<Self, ModelError> {
        let err = |m: String| Err(ModelError::Transcript(m));
        if rounds == 0 {
            return err("rounds must be >= 1".into());
        }
        let per_round = active_debaters.roles(turn_order);
        let expected = per_round.len() * rounds as usize;
        if turns.len() != expected {
            return err(format!("expected {expected} turns, got {}", turns.len()));
        }
        for (i, turn) in turns.iter().enumerate() {
            let round = (i / per_round.len()) as u32 + 1;
            let role = per_round[i % per_round.len()];
            if turn.round != round || turn.role != role {
                return err(format!(
                    "turn {i}: expected {role} in round {round}, got {} in round {}",
                    turn.role, turn.round
                ));
            }
            if turn.score_source == ScoreSource::FallbackDefault && turn.round != 1 {
                return err(format!("turn {i}: default fallback score outside round 1"));
            }
        }
        Ok(DebateTranscript { turns, rounds, turn_order, active_debaters })
    }

    pub fn turns(&self) -> &[DebateTurn] {
        &self.turns
    }

    pub fn rounds(&self) -> u32 {
        self.rounds
    }

    pub fn turn_order(&self) -> TurnOrder {
        self.turn_order
    }

    pub fn active_debaters(&self) -> ActiveDebaters {
        self.active_debaters
    }

    /// Per-round scores of one debater, in round order.
    pub fn trajectory(&self, role: AgentRole) -> Vec<f64> {
        self.turns.iter().filter(|t| t.role == role).map(|t| t.score.value()).collect()
    }

    pub fn last_score(&self, role: AgentRole) -> Option<RiskScore> {
        self.turns.iter().rev().find(|t| t.role == role).map(|t| t.score)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precedent {
    pub case_id: String,
    pub similarity: f64,
    pub excerpt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawBriefing {
    input_summary: String,
    precedents: Vec<Precedent>,
    differences: String,
    patterns: String,
    cold_start: bool,
}

/// Grounding context produced by the Supporter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBriefing")]
pub struct SupporterBriefing {
    pub input_summary: String,
    pub precedents: Vec<Precedent>,
    pub differences: String,
    pub patterns: String,
    pub cold_start: bool,
}

impl TryFrom<RawBriefing> for SupporterBriefing {
    type Error = ModelError;

    fn try_from(raw: RawBriefing) -> Result<Self, Self::Error> {
        let briefing = SupporterBriefing {
            input_summary: raw.input_summary,
            precedents: raw.precedents,
            differences: raw.differences,
            patterns: raw.patterns,
            cold_start: raw.cold_start,
        };
        briefing.check()?;
        Ok(briefing)
    }
}

impl SupporterBriefing {
    pub fn check(&self) -> Result<(), ModelError> {
        if self.cold_start != self.precedents.is_empty() {
            return Err(ModelError::Briefing("cold_start must equal precedents.is_empty()".into()));
        }
        if self.precedents.iter().any(|p| !(p.similarity >= 0.0)) {
            return Err(ModelError::Briefing("similarity must be >= 0".into()));
        }
        if self.precedents.windows(2).any(|w| w[0].similarity < w[1].similarity) {
            return Err(ModelError::Briefing("precedents must be sorted by similarity".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleApplied {
    Rule1Exoneration,
    Rule2RiskConfirmation,
    Rule3DefaultSafe,
    Unstated,
}

/// The Arbiter's parsed, traceable output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub verdict: Verdict,
    pub final_score: RiskScore,
    pub rule_applied: RuleApplied,
    pub reasoning: String,
    pub cited_evidence: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    InvalidOutput,
    ProviderError,
}

impl std::str::FromStr for RunStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "completed" => Ok(RunStatus::Completed),
            "invalid_output" => Ok(RunStatus::InvalidOutput),
            "provider_error" => Ok(RunStatus::ProviderError),
            other => Err(format!("unknown run status `{other}`")),
        }
    }
}

/// Call and token accounting for one run (or an aggregate of runs).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub calls_by_tier: BTreeMap<Tier, u64>,
    pub tokens_in: u64,
    pub tokens_out: u64,
    #[serde(default)]
    pub latency_ms: u64,
}

impl CostLedger {
    pub fn calls(&self, tier: Tier) -> u64 {
        self.calls_by_tier.get(&tier).copied().unwrap_or(0)
    }

    pub fn total_calls(&self) -> u64 {
        self.calls_by_tier.values().sum()
    }

    pub fn total_tokens(&self) -> u64 {
        self.tokens_in + self.tokens_out
    }

    pub fn record(&mut self, tier: Tier, tokens_in: u64, tokens_out: u64, latency_ms: u64) {
        *self.calls_by_tier.entry(tier).or_insert(0) += 1;
        self.tokens_in += tokens_in;
        self.tokens_out += tokens_out;
        self.latency_ms += latency_ms;
    }

    pub fn absorb(&mut self, other: &CostLedger) {
        for (tier, n) in &other.calls_by_tier {
            *self.calls_by_tier.entry(*tier).or_insert(0) += n;
        }
        self.tokens_in += other.tokens_in;
        self.tokens_out += other.tokens_out;
        self.latency_ms += other.latency_ms;
    }
}

/// One provider call attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub role: AgentRole,
    pub tier: Tier,
    pub model: String,
    pub prompt: String,
    pub response: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub latency_ms: u64,
    pub attempt: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Full provenance of one pipeline execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub item_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_id: Option<String>,
    pub item: ContentItem,
    pub config_fingerprint: String,
    pub standardized_text: String,
    #[serde(default)]
    pub placeholder_used: bool,
    pub briefing: Option<SupporterBriefing>,
    pub transcript: Option<DebateTranscript>,
    pub report: Option<AuditReport>,
    pub status: RunStatus,
    /// Unparseable arbiter payload, kept for audit on `InvalidOutput` runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub cost: CostLedger,
    #[serde(default)]
    pub exchanges: Vec<Exchange>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
}

impl RunRecord {
    pub fn verdict(&self) -> Option<Verdict> {
        self.report.as_ref().map(|r| r.verdict)
    }

    pub fn modality(&self) -> Modality {
        self.item.modality
    }

    pub fn label(&self) -> Option<GroundTruthLabel> {
        self.item.label
    }

    /// `None` unless the run completed and its item is labeled.
    pub fn outcome(&self) -> Option<Outcome> {
        Some(Outcome::of(self.verdict()?, self.item.label?))
    }

    /// Checks `status = Completed <=> report present`.
    pub fn is_consistent(&self) -> bool {
        (self.status == RunStatus::Completed) == self.report.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseSource {
    SeedBootstrap,
    CuratedFailure,
    SequentialIndexAll,
}

/// A case library entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: String,
    pub summary: String,
    pub key_cues: Vec<String>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    pub source: CaseSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_run_id: Option<String>,
    pub indexed_text: String,
}

impl CaseRecord {
    pub fn check(&self) -> Result<(), ModelError> {
        if self.case_id.trim().is_empty() {
            return Err(ModelError::CaseRecord("case_id is empty".into()));
        }
        if self.source == CaseSource::CuratedFailure
            && self.key_cues.iter().all(|c| c.trim().is_empty())
        {
            return Err(ModelError::CaseRecord(format!(
                "curated record {} has no key cues",
                self.case_id
            )));
        }
        Ok(())
    }

    /// Text used for retrieval scoring: summary, cues and the original input.
    pub fn compose_indexed_text(summary: &str, key_cues: &[String], input_text: &str) -> String {
        let mut parts = vec![summary.trim().to_string()];
        parts.extend(key_cues.iter().map(|c| c.trim().to_string()));
        parts.push(input_text.trim().to_string());
        parts.retain(|p| !p.is_empty());
        parts.join("\n")
    }
}
