//! HTTP client for OpenAI-compatible chat-completion endpoints.

use std::path::Path;
use std::time::Duration;

use async_trait::async_trait;
use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};

use super::{Provider, ProviderError, ProviderRequest, ProviderResponse, API_KEY_ENV, VISION_API_KEY_ENV};
use crate::model::Tier;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone)]
pub struct OpenAiCompatible {
    http: reqwest::Client,
    api_key: Option<String>,
    vision_api_key: Option<String>,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Debug, Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl OpenAiCompatible {
    pub fn new(timeout: Duration, api_key: Option<String>, vision_api_key: Option<String>) -> Result<Self, ProviderError> {
        let http = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(OpenAiCompatible { http, api_key, vision_api_key })
    }

    /// Reads `AETHERIA_API_KEY` and the optional `AETHERIA_VISION_API_KEY`.
    pub fn from_env(timeout: Duration) -> Result<Self, ProviderError> {
        let read = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        Self::new(timeout, read(API_KEY_ENV), read(VISION_API_KEY_ENV))
    }

    fn key_for(&self, tier: Tier) -> Option<&str> {
        match tier {
            Tier::VisionTier => self.vision_api_key.as_deref().or(self.api_key.as_deref()),
            _ => self.api_key.as_deref(),
        }
    }

    pub(crate) fn request_body(request: &ProviderRequest) -> Result<Value, ProviderError> {
        let content = match &request.image {
            None => Value::String(request.prompt.clone()),
            Some(image) => json!([
                {"type": "text", "text": request.prompt},
                {"type": "image_url", "image_url": {"url": image_url(image)?}},
            ]),
        };
        Ok(json!({
            "model": request.model,
            "messages": [{"role": "user", "content": content}],
            "max_tokens": request.max_output_tokens,
            "temperature": request.temperature,
        }))
    }
}

/// Remote and data URIs pass through; local paths are inlined as base64.
fn image_url(image: &str) -> Result<String, ProviderError> {
    if ["http://", "https://", "data:"].iter().any(|p| image.starts_with(p)) {
        return Ok(image.to_string());
    }
    let path = Path::new(image);
    let bytes = std::fs::read(path)
        .map_err(|e| ProviderError::InvalidRequest(format!("cannot read image {image}: {e}")))?;
    let mime = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        _ => "image/jpeg",
    };
    let encoded = base64::engine::general_purpose::STANDARD.encode(bytes);
    Ok(format!("data:{mime};base64,{encoded}"))
}

#[async_trait]
impl Provider for OpenAiCompatible {
    async fn send(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let url = format!("{}/chat/completions", request.endpoint.trim_end_matches('/'));
        let body = Self::request_body(request)?;
        let mut req = self.http.post(&url).json(&body);
        if let Some(key) = self.key_for(request.tier) {
            req = req.bearer_auth(key);
        }
        let response = req.send().await.map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::Transport(e.to_string())
            }
        })?;
        let status = response.status();
        if !status.is_success() {
            let body = response.text().await.unwrap_or_default();
            return Err(ProviderError::Http { status: status.as_u16(), body });
        }
        let parsed: ChatResponse = response.json().await.map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::InvalidResponse(e.to_string())
            }
        })?;
        let text = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::InvalidResponse("no message content".into()))?;
        let usage = parsed.usage.unwrap_or(Usage { prompt_tokens: 0, completion_tokens: 0 });
        Ok(ProviderResponse { text, tokens_in: usage.prompt_tokens, tokens_out: usage.completion_tokens })
    }
}
