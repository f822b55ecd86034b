use std::sync::Arc;
use std::time::{Duration, Instant};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Semaphore;

use crate::{PromptBundle, VlmError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    /// Server root; `/v1/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token. Unset variable means
    /// no `Authorization` header.
    pub token_env: Option<String>,
    pub timeout_secs: f64,
    pub max_retries: u32,
    /// Delay before retry `r` (0-based) is `backoff_base_secs * 2^r`.
    pub backoff_base_secs: f64,
    pub max_concurrency: usize,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    pub max_image_bytes: usize,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8000".into(),
            model: "qwen2.5-vl".into(),
            token_env: Some("VLM_API_KEY".into()),
            timeout_secs: 60.0,
            max_retries: 3,
            backoff_base_secs: 1.0,
            max_concurrency: 4,
            temperature: 0.0,
            max_tokens: None,
            max_image_bytes: 8 << 20,
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), VlmError> {
        if self.max_concurrency == 0 {
            return Err(VlmError::Config("max_concurrency must be >= 1".into()));
        }
        if !(self.timeout_secs > 0.0 && self.backoff_base_secs >= 0.0) {
            return Err(VlmError::Config(
                "timeout must be > 0 and backoff >= 0".into(),
            ));
        }
        if self.base_url.trim().is_empty() {
            return Err(VlmError::Config("base_url is empty".into()));
        }
        Ok(())
    }

    fn endpoint(&self) -> String {
        format!(
            "{}/v1/chat/completions",
            self.base_url.trim_end_matches('/')
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub total_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResponse {
    pub text: String,
    /// Wall time including retries and backoff.
    pub latency_secs: f64,
    pub usage: Option<TokenUsage>,
    pub request_id: Option<String>,
    pub retries: u32,
}

/// Outcome of a single attempt.
enum Attempt {
    Done(RawResponse),
    Retry(String),
    Fatal(VlmError),
}

/// Shareable chat-completions client. Clones share the concurrency gate.
#[derive(Debug, Clone)]
pub struct VlmClient {
    http: reqwest::Client,
    cfg: EndpointConfig,
    token: Option<String>,
    gate: Arc<Semaphore>,
}

impl VlmClient {
    pub fn new(cfg: EndpointConfig) -> Result<Self, VlmError> {
        cfg.validate()?;
        let token = cfg
            .token_env
            .as_deref()
            .and_then(|name| std::env::var(name).ok())
            .filter(|t| !t.is_empty());
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs))
            .build()
            .map_err(|e| VlmError::Config(e.to_string()))?;
        Ok(Self {
            http,
            gate: Arc::new(Semaphore::new(cfg.max_concurrency)),
            token,
            cfg,
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.cfg
    }

    fn request_body(&self, p: &PromptBundle) -> Value {
        let image_url = format!("data:image/png;base64,{}", STANDARD.encode(&p.image));
        let mut messages = Vec::new();
        if !p.system_text.is_empty() {
            messages.push(json!({"role": "system", "content": p.system_text}));
        }
        messages.push(json!({
            "role": "user",
            "content": [
                {"type": "text", "text": p.user_text},
                {"type": "image_url", "image_url": {"url": image_url}},
            ],
        }));
        let mut body = json!({
            "model": self.cfg.model,
            "temperature": self.cfg.temperature,
            "messages": messages,
        });
        if let Some(max) = self.cfg.max_tokens {
            body["max_tokens"] = json!(max);
        }
        body
    }

    /// Sends one prompt, retrying 429, 5xx, timeouts and transport errors
    /// with exponential backoff. The concurrency permit is held per attempt,
    /// not across backoff sleeps.
    pub async fn query(&self, p: &PromptBundle) -> Result<RawResponse, VlmError> {
        if p.image.len() > self.cfg.max_image_bytes {
            return Err(VlmError::ImageTooLarge {
                bytes: p.image.len(),
                max: self.cfg.max_image_bytes,
            });
        }
        let body = self.request_body(p);
        let start = Instant::now();
        let mut retries = 0;
        loop {
            let outcome = {
                let _permit = self.gate.acquire().await.expect("semaphore never closed");
                self.attempt(&body).await
            };
            match outcome {
                Attempt::Done(mut r) => {
                    r.retries = retries;
                    r.latency_secs = start.elapsed().as_secs_f64();
                    return Ok(r);
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(reason) => {
                    if retries >= self.cfg.max_retries {
                        return Err(VlmError::RetriesExhausted {
                            attempts: retries + 1,
                            last: reason,
                        });
                    }
                    let delay = self.cfg.backoff_base_secs * 2f64.powi(retries as i32);
                    tokio::time::sleep(Duration::from_secs_f64(delay)).await;
                    retries += 1;
                }
            }
        }
    }

    async fn attempt(&self, body: &Value) -> Attempt {
        let mut req = self.http.post(self.cfg.endpoint()).json(body);
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        let resp = match req.send().await {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Attempt::Retry("timed out".into()),
            Err(e) => return Attempt::Retry(format!("transport error: {e}")),
        };
        let status = resp.status();
        let header_id = resp
            .headers()
            .get("x-request-id")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        let text = match resp.text().await {
            Ok(t) => t,
            Err(e) if e.is_timeout() => return Attempt::Retry("timed out reading body".into()),
            Err(e) => return Attempt::Retry(format!("transport error: {e}")),
        };
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Attempt::Retry(format!("HTTP {}", status.as_u16()));
        }
        if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
            return Attempt::Fatal(VlmError::Auth {
                status: status.as_u16(),
            });
        }
        if !status.is_success() {
            return Attempt::Fatal(VlmError::Http {
                status: status.as_u16(),
                body: text.chars().take(500).collect(),
            });
        }
        match parse_completion(&text) {
            Ok((content, usage, body_id)) => Attempt::Done(RawResponse {
                text: content,
                latency_secs: 0.0,
                usage,
                request_id: header_id.or(body_id),
                retries: 0,
            }),
            Err(e) => Attempt::Fatal(e),
        }
    }
}

type Completion = (String, Option<TokenUsage>, Option<String>);

/// Extracts `choices[0].message.content`, accepting either a string or a
/// list of text parts.
fn parse_completion(body: &str) -> Result<Completion, VlmError> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| VlmError::Malformed(format!("invalid JSON: {e}")))?;
    let content = &v["choices"][0]["message"]["content"];
    let text = match content {
        Value::String(s) => s.clone(),
        Value::Array(parts) => parts
            .iter()
            .filter_map(|p| p["text"].as_str())
            .collect::<Vec<_>>()
            .join(""),
        _ => return Err(VlmError::Malformed("no choices[0].message.content".into())),
    };
    if text.trim().is_empty() {
        return Err(VlmError::Malformed("empty assistant message".into()));
    }
    let usage = v
        .get("usage")
        .filter(|u| u.is_object())
        .map(|u| TokenUsage {
            prompt_tokens: u["prompt_tokens"].as_u64(),
            completion_tokens: u["completion_tokens"].as_u64(),
            total_tokens: u["total_tokens"].as_u64(),
        });
    let id = v["id"].as_str().map(str::to_string);
    Ok((text, usage, id))
}
