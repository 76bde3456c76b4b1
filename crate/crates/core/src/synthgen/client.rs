//! Completion-service abstraction and the retrying call wrapper.

use std::time::Duration;

use thiserror::Error;

use super::GenerationConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest<'a> {
    pub model: &'a str,
    pub prompt: &'a str,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    /// Total tokens billed for the call, when the service reports it.
    pub tokens: Option<u64>,
}

/// One failed call to the service.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited")]
    RateLimited,
    #[error("server error {status}: {body}")]
    Server { status: u16, body: String },
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("request rejected with status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl ClientError {
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            ClientError::Transport(_) | ClientError::RateLimited | ClientError::Server { .. }
        )
    }
}

pub trait CompletionClient: Send + Sync {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion, ClientError>;
}

impl<C: CompletionClient + ?Sized> CompletionClient for &C {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion, ClientError> {
        (**self).complete(request)
    }
}

/// Final outcome of a call after retries.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CompleteError {
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: ClientError },
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("malformed service response: {0}")]
    Malformed(String),
    #[error("request rejected with status {status}: {body}")]
    Rejected { status: u16, body: String },
}

impl CompleteError {
    /// True when the service could not be reached at all (as opposed to
    /// answering with an error).
    pub fn is_unreachable(&self) -> bool {
        matches!(
            self,
            CompleteError::RetriesExhausted {
                last: ClientError::Transport(_),
                ..
            }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompleteOutcome {
    pub completion: Completion,
    /// Failed attempts before the successful one.
    pub retries: u32,
}

pub fn backoff_delay(initial: Duration, attempt: u32) -> Duration {
    const MAX: Duration = Duration::from_secs(60);
    initial
        .checked_mul(1u32.checked_shl(attempt.min(16)).unwrap_or(u32::MAX))
        .map_or(MAX, |d| d.min(MAX))
}

/// Calls the service, retrying transport, rate-limit and 5xx failures up to
/// `cfg.retries` times with exponential backoff starting at
/// `cfg.backoff_initial`.
pub fn complete(
    client: &dyn CompletionClient,
    prompt: &str,
    cfg: &GenerationConfig,
) -> Result<CompleteOutcome, CompleteError> {
    let request = CompletionRequest {
        model: &cfg.model_name,
        prompt,
        temperature: cfg.temperature,
        max_tokens: cfg.max_tokens,
        seed: cfg.seed,
    };
    let mut retries = 0;
    loop {
        match client.complete(&request) {
            Ok(completion) => return Ok(CompleteOutcome { completion, retries }),
            Err(ClientError::Auth(m)) => return Err(CompleteError::Auth(m)),
            Err(ClientError::Malformed(m)) => return Err(CompleteError::Malformed(m)),
            Err(ClientError::Rejected { status, body }) => {
                return Err(CompleteError::Rejected { status, body })
            }
            Err(e) => {
                debug_assert!(e.is_retryable());
                if retries >= cfg.retries {
                    return Err(CompleteError::RetriesExhausted {
                        attempts: retries + 1,
                        last: e,
                    });
                }
                let delay = backoff_delay(cfg.backoff_initial, retries);
                log::warn!("completion attempt {} failed ({e}); retrying in {delay:?}", retries + 1);
                std::thread::sleep(delay);
                retries += 1;
            }
        }
    }
}
