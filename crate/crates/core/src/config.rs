//! Experiment configuration and its fingerprint.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::debate::{DebateConfig, DEFAULT_ROUNDS};
use crate::library::DEFAULT_TOP_K;
use crate::model::{ActiveDebaters, TurnOrder};
use crate::provider::{standard_routes, ModelRoute, RetryPolicy, TierModels};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("unknown ablation `{0}`")]
    UnknownAblation(String),
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationFlags {
    pub supporter_enabled: bool,
    pub retrieval_enabled: bool,
    pub strict_enabled: bool,
    pub loose_enabled: bool,
    /// `false` selects arbiter-only mode: no Supporter and no debate.
    pub debate_enabled: bool,
    pub image_modality_enabled: bool,
}

impl Default for AblationFlags {
    fn default() -> Self {
        AblationFlags {
            supporter_enabled: true,
            retrieval_enabled: true,
            strict_enabled: true,
            loose_enabled: true,
            debate_enabled: true,
            image_modality_enabled: true,
        }
    }
}

impl AblationFlags {
    pub const NAMES: &'static [&'static str] =
        &["full", "no-supporter", "no-retrieval", "no-strict", "no-loose", "arbiter-only", "no-image"];

    /// Named single-component ablations, applied on top of `self`.
    pub fn apply(mut self, name: &str) -> Result<Self, ConfigError> {
        match name {
            "full" => self = AblationFlags::default(),
            "no-supporter" => self.supporter_enabled = false,
            "no-retrieval" | "no-rag" => self.retrieval_enabled = false,
            "no-strict" => self.strict_enabled = false,
            "no-loose" => self.loose_enabled = false,
            "arbiter-only" | "no-debate" => self.debate_enabled = false,
            "no-image" => self.image_modality_enabled = false,
            other => return Err(ConfigError::UnknownAblation(other.to_string())),
        }
        Ok(self)
    }

    pub fn supporter_active(&self) -> bool {
        self.debate_enabled && self.supporter_enabled
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    /// Base URL of an OpenAI-compatible API, e.g. `https://api.openai.com/v1`.
    pub endpoint: String,
    pub debater_model: String,
    pub arbiter_model: String,
    pub vision_model: String,
    pub max_output_tokens: u32,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            endpoint: "https://api.openai.com/v1".into(),
            debater_model: String::new(),
            arbiter_model: String::new(),
            vision_model: String::new(),
            max_output_tokens: 1024,
            timeout_secs: 60,
            max_attempts: 3,
            initial_backoff_ms: 1000,
        }
    }
}

impl ModelSettings {
    /// Live providers need a model name on every tier.
    pub fn check_live(&self) -> Result<(), ConfigError> {
        for (field, name) in [
            ("models.debater_model", &self.debater_model),
            ("models.arbiter_model", &self.arbiter_model),
            ("models.vision_model", &self.vision_model),
        ] {
            if name.trim().is_empty() {
                return Err(invalid(field, "required for live model calls"));
            }
        }
        if self.endpoint.trim().is_empty() {
            return Err(invalid("models.endpoint", "required for live model calls"));
        }
        Ok(())
    }

    pub fn routes(&self) -> Vec<ModelRoute> {
        let models = TierModels {
            debater: self.debater_model.clone(),
            arbiter: self.arbiter_model.clone(),
            vision: self.vision_model.clone(),
        };
        standard_routes(&self.endpoint, &models, self.max_output_tokens)
    }

    pub fn retry(&self) -> RetryPolicy {
        RetryPolicy { max_attempts: self.max_attempts, initial_backoff_ms: self.initial_backoff_ms }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_rounds: u32,
    pub k_retrieval: usize,
    pub turn_order: TurnOrder,
    pub ablation: AblationFlags,
    pub models: ModelSettings,
    pub parallelism: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_rounds: DEFAULT_ROUNDS,
            k_retrieval: DEFAULT_TOP_K,
            turn_order: TurnOrder::StrictFirst,
            ablation: AblationFlags::default(),
            models: ModelSettings::default(),
            parallelism: 4,
            seed: 42,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_rounds == 0 {
            return Err(invalid("n_rounds", "must be >= 1"));
        }
        if self.k_retrieval == 0 {
            return Err(invalid("k_retrieval", "must be >= 1"));
        }
        if self.parallelism == 0 {
            return Err(invalid("parallelism", "must be >= 1"));
        }
        if self.models.max_attempts == 0 {
            return Err(invalid("models.max_attempts", "must be >= 1"));
        }
        if self.models.timeout_secs == 0 {
            return Err(invalid("models.timeout_secs", "must be >= 1"));
        }
        let a = &self.ablation;
        if a.debate_enabled && !a.strict_enabled && !a.loose_enabled {
            return Err(invalid("ablation", "at least one debater must be enabled when the debate is on"));
        }
        Ok(())
    }

    /// `None` in arbiter-only mode.
    pub fn debate(&self) -> Option<DebateConfig> {
        if !self.ablation.debate_enabled {
            return None;
        }
        let active = ActiveDebaters::from_flags(self.ablation.strict_enabled, self.ablation.loose_enabled)?;
        DebateConfig::new(self.n_rounds, self.turn_order, active).ok()
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}
