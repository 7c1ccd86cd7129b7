//! OpenAI-compatible chat completions client.

use std::time::Duration;

use craftplan_core::planner::{ChatEndpoint, ChatMessage, EndpointError};
use serde::Serialize;
use serde_json::Value;

pub const ENV_BASE_URL: &str = "LLM_BASE_URL";
pub const ENV_API_KEY: &str = "LLM_API_KEY";
pub const ENV_MODEL: &str = "LLM_MODEL";

#[derive(Debug, Clone)]
pub struct HttpEndpoint {
    /// Up to and including `/v1`, e.g. `http://localhost:8000/v1`.
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub temperature: Option<f64>,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct Request<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature: Option<f64>,
}

impl HttpEndpoint {
    pub fn new(base_url: &str, api_key: Option<String>, model: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            model: model.to_string(),
            temperature: None,
            agent,
        }
    }

    /// Reads `LLM_BASE_URL`, `LLM_API_KEY` and `LLM_MODEL`.
    pub fn from_env() -> Result<Self, EndpointError> {
        let base = std::env::var(ENV_BASE_URL).map_err(|_| EndpointError::Unavailable(format!("{ENV_BASE_URL} is not set")))?;
        let key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| "default".to_string());
        Ok(Self::new(&base, key, &model, Duration::from_secs(120)))
    }

    pub fn url(&self) -> String {
        format!("{}/chat/completions", self.base_url)
    }
}

/// `choices[0].message.content` of a completion body.
pub fn reply_content(body: &Value) -> Result<String, EndpointError> {
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| EndpointError::BadResponse("missing choices[0].message.content".into()))
}

impl ChatEndpoint for HttpEndpoint {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<String, EndpointError> {
        let body = Request {
            model: &self.model,
            messages,
            temperature: self.temperature,
        };
        let mut req = self.agent.post(&self.url()).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| EndpointError::Unavailable(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(EndpointError::Unavailable(format!("http status {status}")));
        }
        if !(200..300).contains(&status) {
            return Err(EndpointError::BadResponse(format!("http status {status}")));
        }
        let json: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| EndpointError::BadResponse(e.to_string()))?;
        reply_content(&json)
    }
}
