use std::future::Future;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use crate::config::GenConfig;
use crate::GenError;

pub const API_KEY_ENV: &str = "LLM_API_KEY";

/// How a single completion request failed.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RequestError {
    /// Credentials rejected; the run stops.
    #[error("authentication failed: {0}")]
    Auth(String),
    /// Worth retrying: rate limiting, server errors, timeouts, dropped connections.
    #[error("transient failure: {0}")]
    Transient(String),
    /// The request itself was refused; retrying will not help.
    #[error("request rejected: {0}")]
    Rejected(String),
    /// The endpoint answered but the body was not a usable completion.
    #[error("unparseable response: {0}")]
    Malformed(String),
}

/// One chat completion for a single user message.
pub trait ChatClient: Sync {
    fn complete(&self, prompt: &str) -> impl Future<Output = Result<String, RequestError>> + Send;
}

/// Client for the `/chat/completions` route of an OpenAI-compatible server.
#[derive(Debug, Clone)]
pub struct OpenAiClient {
    http: reqwest::Client,
    url: String,
    api_key: String,
    model: String,
    temperature: Option<f64>,
    max_tokens: Option<u32>,
}

impl OpenAiClient {
    pub fn new(cfg: &GenConfig, api_key: impl Into<String>) -> Result<Self, GenError> {
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| GenError::Config(format!("http client: {e}")))?;
        let base = cfg.endpoint.trim_end_matches('/');
        if base.is_empty() {
            return Err(GenError::Config("endpoint is required".into()));
        }
        let url = if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        };
        Ok(OpenAiClient {
            http,
            url,
            api_key: api_key.into(),
            model: cfg.model.clone(),
            temperature: cfg.temperature,
            max_tokens: cfg.max_tokens,
        })
    }

    /// Reads the key from `LLM_API_KEY`.
    pub fn from_env(cfg: &GenConfig) -> Result<Self, GenError> {
        let key = std::env::var(API_KEY_ENV).map_err(|_| GenError::MissingApiKey)?;
        Self::new(cfg, key)
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn body(&self, prompt: &str) -> serde_json::Value {
        let mut body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
        });
        if let Some(t) = self.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(m) = self.max_tokens {
            body["max_tokens"] = json!(m);
        }
        body
    }
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

pub(crate) fn classify_status(status: u16, body: &str) -> RequestError {
    let msg = format!("HTTP {status}: {}", body.chars().take(200).collect::<String>());
    match status {
        401 | 403 => RequestError::Auth(msg),
        408 | 409 | 425 | 429 => RequestError::Transient(msg),
        s if s >= 500 => RequestError::Transient(msg),
        _ => RequestError::Rejected(msg),
    }
}

pub(crate) fn extract_content(body: &str) -> Result<String, RequestError> {
    let c: Completion = serde_json::from_str(body).map_err(|e| RequestError::Malformed(e.to_string()))?;
    c.choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| RequestError::Malformed("no message content".into()))
}

impl ChatClient for OpenAiClient {
    async fn complete(&self, prompt: &str) -> Result<String, RequestError> {
        let resp = self
            .http
            .post(&self.url)
            .bearer_auth(&self.api_key)
            .json(&self.body(prompt))
            .send()
            .await
            .map_err(|e| RequestError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.text().await.map_err(|e| RequestError::Transient(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(classify_status(status, &text));
        }
        extract_content(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_classes() {
        assert!(matches!(classify_status(401, ""), RequestError::Auth(_)));
        assert!(matches!(classify_status(403, ""), RequestError::Auth(_)));
        assert!(matches!(classify_status(429, ""), RequestError::Transient(_)));
        assert!(matches!(classify_status(503, ""), RequestError::Transient(_)));
        assert!(matches!(classify_status(400, ""), RequestError::Rejected(_)));
    }

    #[test]
    fn content_extraction() {
        let ok = r#"{"choices":[{"message":{"role":"assistant","content":"a, b, c"}}]}"#;
        assert_eq!(extract_content(ok).unwrap(), "a, b, c");
        assert!(matches!(extract_content("not json"), Err(RequestError::Malformed(_))));
        assert!(matches!(extract_content(r#"{"choices":[]}"#), Err(RequestError::Malformed(_))));
    }

    #[test]
    fn url_and_body() {
        let cfg = GenConfig {
            endpoint: "http://host/v1/".into(),
            model: "m".into(),
            temperature: Some(1.0),
            ..Default::default()
        };
        let c = OpenAiClient::new(&cfg, "k").unwrap();
        assert_eq!(c.url(), "http://host/v1/chat/completions");
        let b = c.body("hi");
        assert_eq!(b["messages"][0]["content"], "hi");
        assert_eq!(b["temperature"], 1.0);
        assert_eq!(b["max_tokens"], 32);
    }
}
