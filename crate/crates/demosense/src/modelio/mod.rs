//! Backends that score continuations with log probabilities.
//!
//! Everything downstream speaks one contract: given `(prompt,
//! continuation)`, return the natural-log probability of the continuation
//! and its token count. The token count is informational; no caller divides
//! a score by it. Implementations: [`SyntheticTopicModel`] (in-process,
//! deterministic) and [`HttpBackend`] (wire protocol). [`server`] exposes
//! the mock over the same wire protocol for end-to-end runs.

pub mod client;
pub mod mock;
pub mod server;

pub use client::HttpBackend;
pub use mock::{SegmentedPrompt, SyntheticTopicModel};
pub use server::{serve_mock, served_vocabulary, MockServer};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringRequest {
    pub prompt: String,
    pub continuation: String,
}

impl ScoringRequest {
    pub fn new(prompt: impl Into<String>, continuation: impl Into<String>) -> Self {
        ScoringRequest {
            prompt: prompt.into(),
            continuation: continuation.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringResponse {
    /// Natural-log probability of the continuation given the prompt,
    /// scored exactly as sent: no truncation, no length normalization.
    pub logprob: f64,
    /// Continuation length in the backend's tokens.
    pub tokens: u32,
}

pub trait Backend: Send + Sync {
    fn score(&self, request: &ScoringRequest) -> Result<ScoringResponse>;

    fn score_batch(&self, requests: &[ScoringRequest]) -> Result<Vec<ScoringResponse>> {
        requests.iter().map(|r| self.score(r)).collect()
    }
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn score(&self, request: &ScoringRequest) -> Result<ScoringResponse> {
        (**self).score(request)
    }

    fn score_batch(&self, requests: &[ScoringRequest]) -> Result<Vec<ScoringResponse>> {
        (**self).score_batch(requests)
    }
}

/// Connection settings for a wire-protocol endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    /// e.g. `http://127.0.0.1:8700`.
    pub base_url: String,
    /// Environment variable holding the bearer token; unset or empty means
    /// no auth header.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    /// Retries after the first attempt, on transport errors and 5xx only.
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// Cap on concurrent in-flight requests across all threads.
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
}

fn default_api_key_env() -> String {
    "MODEL_API_KEY".into()
}

fn default_timeout_secs() -> u64 {
    60
}

fn default_max_retries() -> u32 {
    3
}

fn default_max_in_flight() -> usize {
    4
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        EndpointConfig {
            base_url: base_url.into(),
            api_key_env: default_api_key_env(),
            timeout_secs: default_timeout_secs(),
            max_retries: default_max_retries(),
            max_in_flight: default_max_in_flight(),
        }
    }

    /// Reads `MODEL_ENDPOINT` (required) and keeps the default
    /// `MODEL_API_KEY` env name for auth.
    pub fn from_env() -> Result<Self> {
        let base_url = std::env::var("MODEL_ENDPOINT")
            .map_err(|_| Error::BackendUnavailable("MODEL_ENDPOINT is not set".into()))?;
        Ok(Self::new(base_url))
    }
}
