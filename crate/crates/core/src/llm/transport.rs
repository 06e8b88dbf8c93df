use std::thread;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{LlmBackend, LlmError, LlmRequest, LlmResponse};

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    /// Base URL; `/chat/completions` is appended.
    pub endpoint: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub attempts: u32,
    pub backoff: Duration,
}

impl HttpConfig {
    pub fn new(endpoint: &str, api_key: Option<String>) -> Self {
        HttpConfig {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            api_key,
            timeout: Duration::from_secs(60),
            attempts: 3,
            backoff: Duration::from_millis(500),
        }
    }
}

/// OpenAI-compatible chat-completion client.
#[derive(Debug)]
pub struct HttpTransport {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

impl HttpTransport {
    pub fn new(config: HttpConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(HttpTransport { config, client })
    }

    fn attempt(&self, req: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let body = json!({
            "model": req.model,
            "temperature": req.temperature,
            "messages": [
                {"role": "system", "content": req.system},
                {"role": "user", "content": req.user},
            ],
        });
        let mut call = self
            .client
            .post(format!("{}/chat/completions", self.config.endpoint))
            .json(&body);
        if let Some(key) = &self.config.api_key {
            call = call.bearer_auth(key);
        }
        let resp = call.send().map_err(classify)?;
        let status = resp.status();
        if !status.is_success() {
            return Err(LlmError::Transport {
                status: Some(status.as_u16()),
                message: status.canonical_reason().unwrap_or("error").to_string(),
            });
        }
        let parsed: ChatResponse = resp.json().map_err(classify)?;
        let raw = parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| LlmError::Transport {
                status: Some(status.as_u16()),
                message: "response has no choices".into(),
            })?;
        Ok(LlmResponse { raw })
    }
}

fn classify(e: reqwest::Error) -> LlmError {
    if e.is_timeout() {
        LlmError::Timeout
    } else {
        LlmError::Transport {
            status: e.status().map(|s| s.as_u16()),
            message: e.to_string(),
        }
    }
}

impl LlmBackend for HttpTransport {
    fn complete(&self, req: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let mut delay = self.config.backoff;
        let mut last = LlmError::Transport {
            status: None,
            message: "no attempt made".into(),
        };
        for i in 0..self.config.attempts.max(1) {
            if i > 0 {
                thread::sleep(delay);
                delay *= 2;
            }
            match self.attempt(req) {
                Ok(r) => return Ok(r),
                Err(e) => {
                    log::warn!("llm request attempt {} failed: {e}", i + 1);
                    last = e;
                }
            }
        }
        Err(last)
    }

    fn name(&self) -> String {
        format!("http:{}", self.config.endpoint)
    }
}
