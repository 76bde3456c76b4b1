//! OpenAI-completions-compatible HTTP client.

use std::fmt;
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use super::client::{ClientError, Completion, CompletionClient, CompletionRequest};

pub const ENV_BASE_URL: &str = "OPENAI_BASE_URL";
pub const ENV_API_KEY: &str = "OPENAI_API_KEY";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

pub struct HttpCompletionClient {
    endpoint: String,
    api_key: String,
    agent: ureq::Agent,
}

// The credential never reaches logs.
impl fmt::Debug for HttpCompletionClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpCompletionClient")
            .field("endpoint", &self.endpoint)
            .field("api_key", &"<redacted>")
            .finish()
    }
}

#[derive(Serialize)]
struct Body<'a> {
    model: &'a str,
    prompt: &'a str,
    temperature: f64,
    max_tokens: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

impl HttpCompletionClient {
    /// `base_url` is the API root; requests go to `{base_url}/completions`.
    pub fn new(base_url: &str, api_key: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        HttpCompletionClient {
            endpoint: format!("{}/completions", base_url.trim_end_matches('/')),
            api_key: api_key.into(),
            agent,
        }
    }

    /// Reads the endpoint and credential from `OPENAI_BASE_URL` (optional)
    /// and `OPENAI_API_KEY`.
    pub fn from_env() -> Result<Self, ClientError> {
        let key = std::env::var(ENV_API_KEY)
            .map_err(|_| ClientError::Auth(format!("{ENV_API_KEY} is not set")))?;
        let base = std::env::var(ENV_BASE_URL).unwrap_or_else(|_| DEFAULT_BASE_URL.to_string());
        Ok(Self::new(&base, key))
    }
}

pub(crate) fn parse_response(body: &str) -> Result<Completion, ClientError> {
    let v: Value =
        serde_json::from_str(body).map_err(|e| ClientError::Malformed(e.to_string()))?;
    let text = v
        .pointer("/choices/0/text")
        .and_then(Value::as_str)
        .ok_or_else(|| ClientError::Malformed("missing choices[0].text".into()))?;
    Ok(Completion {
        text: text.to_string(),
        tokens: v.pointer("/usage/total_tokens").and_then(Value::as_u64),
    })
}

impl CompletionClient for HttpCompletionClient {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion, ClientError> {
        let body = Body {
            model: request.model,
            prompt: request.prompt,
            temperature: request.temperature,
            max_tokens: request.max_tokens,
            seed: request.seed,
        };
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        match status {
            200..=299 => parse_response(&text),
            401 | 403 => Err(ClientError::Auth(format!("status {status}"))),
            429 => Err(ClientError::RateLimited),
            500..=599 => Err(ClientError::Server { status, body: text }),
            _ => Err(ClientError::Rejected { status, body: text }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_choice_text_and_usage() {
        let c = parse_response(r#"{"choices":[{"text":"1. a\n2. b"}],"usage":{"total_tokens":42}}"#)
            .unwrap();
        assert_eq!(c.text, "1. a\n2. b");
        assert_eq!(c.tokens, Some(42));
        assert!(matches!(parse_response("{}"), Err(ClientError::Malformed(_))));
        assert!(matches!(parse_response("<html>"), Err(ClientError::Malformed(_))));
    }

    #[test]
    fn debug_redacts_key() {
        let c = HttpCompletionClient::new("http://localhost:1/v1/", "sk-secret");
        let shown = format!("{c:?}");
        assert!(!shown.contains("sk-secret"));
        assert!(shown.contains("http://localhost:1/v1/completions"));
    }
}
