//! Model access: routing, retries and token accounting in front of a
//! pluggable [`Provider`] backend.
//!
//! Two backends ship with the crate: [`OpenAiCompatible`] speaks the
//! chat-completions wire format over HTTP, and [`ReplayProvider`] answers
//! from a scripted JSON Lines file so whole pipeline runs can be replayed
//! offline.

mod openai;
mod replay;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{elapsed_ms, SharedClock};
use crate::model::{AgentRole, CostLedger, Exchange, Tier};

pub use openai::{OpenAiCompatible, DEFAULT_TIMEOUT};
pub use replay::{ReplayEntry, ReplayError, ReplayProvider, ReplayScriptBuilder};

pub const API_KEY_ENV: &str = "AETHERIA_API_KEY";
pub const VISION_API_KEY_ENV: &str = "AETHERIA_VISION_API_KEY";

/// Instruction sent with every image description request.
pub const VISION_PROMPT: &str = "Describe this image in detail and objectively. List every visible \
object, person, text, symbol and label, and the overall setting. Do not speculate about intent and \
do not make a safety judgment.";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out")]
    Timeout,
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("replay script exhausted: no entry for ({role}, {index})")]
    ScriptExhausted { role: AgentRole, index: u32 },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid response: {0}")]
    InvalidResponse(String),
}

impl ProviderError {
    /// Transport failures, timeouts and server errors are worth another attempt.
    pub fn is_retryable(&self) -> bool {
        match self {
            ProviderError::Transport(_) | ProviderError::Timeout => true,
            ProviderError::Http { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GatewayError {
    #[error("no model route configured for {0}")]
    RouteMissing(AgentRole),
    #[error("duplicate model route for {0}")]
    DuplicateRoute(AgentRole),
    #[error("route for {role} is invalid: {reason}")]
    InvalidRoute { role: AgentRole, reason: String },
    #[error("{role} call failed after {attempts} attempt(s): {source}")]
    Provider {
        role: AgentRole,
        attempts: u32,
        #[source]
        source: ProviderError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRoute {
    pub role: AgentRole,
    pub model_name: String,
    pub tier: Tier,
    pub endpoint: String,
    pub max_output_tokens: u32,
    pub temperature: f64,
}

impl ModelRoute {
    pub fn temperature_for(role: AgentRole) -> f64 {
        match role {
            AgentRole::Supporter | AgentRole::StrictDebater | AgentRole::LooseDebater => 0.2,
            _ => 0.0,
        }
    }
}

/// Model names per tier, used to build a full routing table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierModels {
    pub debater: String,
    pub arbiter: String,
    pub vision: String,
}

/// One route per role: supporter and debaters on the debater tier, arbiter
/// and curator on the arbiter tier, preprocessor on the vision tier.
pub fn standard_routes(endpoint: &str, models: &TierModels, max_output_tokens: u32) -> Vec<ModelRoute> {
    AgentRole::ALL
        .into_iter()
        .map(|role| {
            let tier = role.default_tier();
            let model_name = match tier {
                Tier::DebaterTier => &models.debater,
                Tier::ArbiterTier => &models.arbiter,
                Tier::VisionTier => &models.vision,
            };
            ModelRoute {
                role,
                model_name: model_name.clone(),
                tier,
                endpoint: endpoint.to_string(),
                max_output_tokens,
                temperature: ModelRoute::temperature_for(role),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ProviderRequest {
    pub role: AgentRole,
    pub tier: Tier,
    pub model: String,
    pub endpoint: String,
    pub prompt: String,
    pub max_output_tokens: u32,
    pub temperature: f64,
    /// Image path or URI for vision requests.
    pub image: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderResponse {
    pub text: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
}

#[async_trait]
pub trait Provider: Send + Sync {
    async fn send(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError>;

    /// Positional providers answer by call order, so callers must not issue
    /// requests concurrently if they want reproducible results.
    fn is_positional(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, initial_backoff_ms: 1000 }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy { max_attempts: 1, initial_backoff_ms: 0 }
    }

    fn backoff(&self, failed_attempt: u32) -> Duration {
        let factor = 1u64 << (failed_attempt.saturating_sub(1)).min(16);
        Duration::from_millis(self.initial_backoff_ms.saturating_mul(factor))
    }
}

/// Per-run accumulation of exchanges and costs. Each pipeline run owns one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CallLog {
    pub exchanges: Vec<Exchange>,
    pub ledger: CostLedger,
}

impl CallLog {
    pub fn new() -> Self {
        Self::default()
    }
}

pub struct Gateway {
    provider: Arc<dyn Provider>,
    routes: BTreeMap<AgentRole, ModelRoute>,
    retry: RetryPolicy,
    clock: SharedClock,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("routes", &self.routes)
            .field("retry", &self.retry)
            .finish_non_exhaustive()
    }
}

impl Gateway {
    pub fn new(
        provider: Arc<dyn Provider>,
        routes: Vec<ModelRoute>,
        retry: RetryPolicy,
        clock: SharedClock,
    ) -> Result<Self, GatewayError> {
        let mut table = BTreeMap::new();
        for route in routes {
            if route.role == AgentRole::Preprocessor && route.tier != Tier::VisionTier {
                return Err(GatewayError::InvalidRoute {
                    role: route.role,
                    reason: "preprocessor must route to vision_tier".into(),
                });
            }
            if !(route.temperature >= 0.0) {
                return Err(GatewayError::InvalidRoute {
                    role: route.role,
                    reason: "temperature must be >= 0".into(),
                });
            }
            let role = route.role;
            if table.insert(role, route).is_some() {
                return Err(GatewayError::DuplicateRoute(role));
            }
        }
        Ok(Gateway { provider, routes: table, retry, clock })
    }

    pub fn route(&self, role: AgentRole) -> Result<&ModelRoute, GatewayError> {
        self.routes.get(&role).ok_or(GatewayError::RouteMissing(role))
    }

    pub fn routes(&self) -> impl Iterator<Item = &ModelRoute> {
        self.routes.values()
    }

    pub fn is_positional(&self) -> bool {
        self.provider.is_positional()
    }

    pub fn clock(&self) -> &SharedClock {
        &self.clock
    }

    /// Sends one prompt for `role`, retrying transient failures. Every attempt
    /// is appended to `log`; only the successful one is billed.
    pub async fn complete(
        &self,
        role: AgentRole,
        prompt: &str,
        log: &mut CallLog,
    ) -> Result<Exchange, GatewayError> {
        self.call(role, prompt.to_string(), None, log).await
    }

    /// Translates an image into a textual description via the vision route.
    pub async fn describe_image(
        &self,
        image_ref: &str,
        log: &mut CallLog,
    ) -> Result<String, GatewayError> {
        let exchange = self
            .call(AgentRole::Preprocessor, VISION_PROMPT.to_string(), Some(image_ref.to_string()), log)
            .await?;
        if exchange.response.trim().is_empty() {
            return Err(GatewayError::Provider {
                role: AgentRole::Preprocessor,
                attempts: exchange.attempt,
                source: ProviderError::InvalidResponse("empty image description".into()),
            });
        }
        Ok(exchange.response)
    }

    async fn call(
        &self,
        role: AgentRole,
        prompt: String,
        image: Option<String>,
        log: &mut CallLog,
    ) -> Result<Exchange, GatewayError> {
        let route = self.route(role)?;
        let request = ProviderRequest {
            role,
            tier: route.tier,
            model: route.model_name.clone(),
            endpoint: route.endpoint.clone(),
            prompt,
            max_output_tokens: route.max_output_tokens,
            temperature: route.temperature,
            image,
        };
        let max_attempts = self.retry.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            let started = self.clock.now();
            let result = self.provider.send(&request).await;
            let latency_ms = elapsed_ms(started, self.clock.now());
            match result {
                Ok(resp) => {
                    let exchange = Exchange {
                        role,
                        tier: route.tier,
                        model: route.model_name.clone(),
                        prompt: request.prompt.clone(),
                        response: resp.text,
                        tokens_in: resp.tokens_in,
                        tokens_out: resp.tokens_out,
                        latency_ms,
                        attempt,
                        error: None,
                    };
                    log.ledger.record(route.tier, resp.tokens_in, resp.tokens_out, latency_ms);
                    log.exchanges.push(exchange.clone());
                    return Ok(exchange);
                }
                Err(err) => {
                    tracing::warn!(%role, attempt, error = %err, "provider call failed");
                    log.exchanges.push(Exchange {
                        role,
                        tier: route.tier,
                        model: route.model_name.clone(),
                        prompt: request.prompt.clone(),
                        response: String::new(),
                        tokens_in: 0,
                        tokens_out: 0,
                        latency_ms,
                        attempt,
                        error: Some(err.to_string()),
                    });
                    if !err.is_retryable() || attempt >= max_attempts {
                        return Err(GatewayError::Provider { role, attempts: attempt, source: err });
                    }
                    tokio::time::sleep(self.retry.backoff(attempt)).await;
                    attempt += 1;
                }
            }
        }
    }
}
