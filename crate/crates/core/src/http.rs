//! Minimal blocking JSON-over-HTTP client shared by the tagger, judge and
//! quality-score clients: per-request timeout, bounded in-flight requests
//! and retry with exponential backoff.

use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("could not decode response: {0}")]
    Decode(String),
    #[error("invalid client configuration: {0}")]
    Config(String),
}

impl ClientError {
    fn is_retryable(&self) -> bool {
        match self {
            ClientError::Transport(_) => true,
            ClientError::Status { status, .. } => *status == 429 || *status >= 500,
            ClientError::Decode(_) | ClientError::Config(_) => false,
        }
    }
}

/// Connection settings for one remote scoring endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringClientConfig {
    pub endpoint: String,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
    pub retries: u32,
}

impl Default for ScoringClientConfig {
    fn default() -> Self {
        ScoringClientConfig {
            endpoint: String::new(),
            timeout_ms: 30_000,
            max_in_flight: 32,
            retries: 2,
        }
    }
}

impl ScoringClientConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        ScoringClientConfig {
            endpoint: endpoint.into(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if self.endpoint.is_empty() {
            return Err(ClientError::Config("endpoint URL is empty".into()));
        }
        if !(self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")) {
            return Err(ClientError::Config(format!(
                "endpoint `{}` must be an http(s) URL",
                self.endpoint
            )));
        }
        if self.timeout_ms == 0 {
            return Err(ClientError::Config("timeout must be > 0".into()));
        }
        if self.max_in_flight == 0 {
            return Err(ClientError::Config("max in-flight must be >= 1".into()));
        }
        Ok(())
    }
}

/// Counting semaphore; std has none.
#[derive(Debug)]
pub struct Semaphore {
    available: Mutex<usize>,
    cv: Condvar,
}

pub struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    pub fn new(permits: usize) -> Self {
        Semaphore {
            available: Mutex::new(permits),
            cv: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.cv.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.available.lock().unwrap_or_else(|e| e.into_inner());
        *n += 1;
        self.0.cv.notify_one();
    }
}

/// JSON POST client for a single endpoint. Cheap to clone; clones share the
/// in-flight limit.
#[derive(Clone)]
pub struct JsonClient {
    agent: ureq::Agent,
    config: ScoringClientConfig,
    limit: Arc<Semaphore>,
}

impl std::fmt::Debug for JsonClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JsonClient")
            .field("config", &self.config)
            .finish()
    }
}

const BACKOFF_BASE_MS: u64 = 50;

impl JsonClient {
    pub fn new(config: ScoringClientConfig) -> Result<Self, ClientError> {
        config.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(JsonClient {
            agent,
            limit: Arc::new(Semaphore::new(config.max_in_flight)),
            config,
        })
    }

    pub fn config(&self) -> &ScoringClientConfig {
        &self.config
    }

    /// POST `body` and decode the JSON reply, retrying transport failures,
    /// 429 and 5xx up to `retries` extra times.
    pub fn post_json<Req, Resp>(&self, body: &Req) -> Result<Resp, ClientError>
    where
        Req: Serialize + ?Sized,
        Resp: DeserializeOwned,
    {
        let mut attempt = 0u32;
        loop {
            let result = {
                let _permit = self.limit.acquire();
                self.post_once(body)
            };
            match result {
                Err(e) if e.is_retryable() && attempt < self.config.retries => {
                    tracing::debug!(endpoint = %self.config.endpoint, attempt, error = %e, "retrying");
                    thread::sleep(Duration::from_millis(BACKOFF_BASE_MS << attempt.min(6)));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn post_once<Req, Resp>(&self, body: &Req) -> Result<Resp, ClientError>
    where
        Req: Serialize + ?Sized,
        Resp: DeserializeOwned,
    {
        let mut resp = self
            .agent
            .post(&self.config.endpoint)
            .send_json(body)
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(ClientError::Status { status, body });
        }
        resp.body_mut()
            .read_json::<Resp>()
            .map_err(|e| ClientError::Decode(e.to_string()))
    }
}

#[derive(Debug, Serialize)]
struct CompletionRequest<'a> {
    prompt: &'a str,
    max_tokens: u32,
    temperature: u32,
}

#[derive(Debug, Deserialize)]
struct CompletionResponse {
    text: String,
}

/// Prompt in, completion text out.
pub trait CompletionClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, ClientError>;
}

/// Completion client speaking `{"prompt","max_tokens","temperature":0}` →
/// `{"text"}`.
#[derive(Debug, Clone)]
pub struct HttpCompletionClient {
    inner: JsonClient,
    max_tokens: u32,
}

impl HttpCompletionClient {
    pub const DEFAULT_MAX_TOKENS: u32 = 16;

    pub fn new(config: ScoringClientConfig) -> Result<Self, ClientError> {
        Ok(HttpCompletionClient {
            inner: JsonClient::new(config)?,
            max_tokens: Self::DEFAULT_MAX_TOKENS,
        })
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn config(&self) -> &ScoringClientConfig {
        self.inner.config()
    }
}

impl CompletionClient for HttpCompletionClient {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        let resp: CompletionResponse = self.inner.post_json(&CompletionRequest {
            prompt,
            max_tokens: self.max_tokens,
            temperature: 0,
        })?;
        Ok(resp.text)
    }
}

impl<T: CompletionClient + ?Sized> CompletionClient for Arc<T> {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        (**self).complete(prompt)
    }
}

impl<T: CompletionClient + ?Sized> CompletionClient for &T {
    fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        (**self).complete(prompt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn config_validation() {
        assert!(ScoringClientConfig::new("http://localhost:1/x")
            .validate()
            .is_ok());
        assert!(ScoringClientConfig::new("").validate().is_err());
        assert!(ScoringClientConfig::new("localhost:1").validate().is_err());
        let mut c = ScoringClientConfig::new("http://h/");
        c.timeout_ms = 0;
        assert!(c.validate().is_err());
        c.timeout_ms = 10;
        c.max_in_flight = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn semaphore_bounds_concurrency() {
        let sem = Semaphore::new(2);
        let active = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    let _p = sem.acquire();
                    let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    thread::sleep(Duration::from_millis(5));
                    active.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }

    #[test]
    fn unreachable_endpoint_is_a_transport_error() {
        let mut cfg = ScoringClientConfig::new("http://127.0.0.1:9/score");
        cfg.retries = 1;
        cfg.timeout_ms = 500;
        let client = HttpCompletionClient::new(cfg).unwrap();
        assert!(matches!(
            client.complete("hi"),
            Err(ClientError::Transport(_))
        ));
    }
}
