//! Wire-protocol client.
//!
//! `POST {base}/v1/score` with `{"prompt", "continuation"}` returns
//! `{"logprob", "tokens"}`; `POST {base}/v1/score_batch` wraps parallel
//! arrays as `{"requests": [...]}` / `{"results": [...]}`. Transport
//! failures and 5xx responses retry with exponential backoff; 4xx means the
//! request itself is wrong and fails immediately. A counting gate caps
//! in-flight requests across however many threads share the client.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::modelio::{Backend, EndpointConfig, ScoringRequest, ScoringResponse};

struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct GatePermit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Gate {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> GatePermit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        GatePermit(self)
    }
}

impl Drop for GatePermit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

pub struct HttpBackend {
    http: reqwest::blocking::Client,
    base_url: String,
    bearer: Option<String>,
    max_retries: u32,
    gate: Gate,
}

#[derive(Deserialize)]
struct WireScore {
    logprob: f64,
    tokens: u32,
}

#[derive(Deserialize)]
struct WireBatch {
    results: Vec<WireScore>,
}

#[derive(serde::Serialize)]
struct BatchBody<'a> {
    requests: &'a [ScoringRequest],
}

const BACKOFF_BASE: Duration = Duration::from_millis(100);
const BACKOFF_CAP: Duration = Duration::from_secs(2);

impl HttpBackend {
    pub fn new(config: &EndpointConfig) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| Error::BackendUnavailable(e.to_string()))?;
        let bearer = if config.api_key_env.is_empty() {
            None
        } else {
            std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty())
        };
        Ok(HttpBackend {
            http,
            base_url: config.base_url.trim_end_matches('/').to_string(),
            bearer,
            max_retries: config.max_retries,
            gate: Gate::new(config.max_in_flight),
        })
    }

    pub fn from_env() -> Result<Self> {
        Self::new(&EndpointConfig::from_env()?)
    }

    /// Sends one POST with retries; the JSON decode runs on every attempt's
    /// 2xx body. 4xx aborts, 5xx and transport errors back off and retry.
    fn post_json<T: serde::Serialize, R: for<'de> Deserialize<'de>>(
        &self,
        path: &str,
        body: &T,
    ) -> Result<R> {
        let _permit = self.gate.acquire();
        let url = format!("{}{}", self.base_url, path);
        let mut last_error = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                let backoff = BACKOFF_BASE
                    .saturating_mul(1u32 << (attempt - 1).min(16))
                    .min(BACKOFF_CAP);
                std::thread::sleep(backoff);
            }
            let mut req = self.http.post(&url).json(body);
            if let Some(token) = &self.bearer {
                req = req.bearer_auth(token);
            }
            match req.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp.json::<R>().map_err(|e| {
                            Error::Protocol(format!("bad response body from {url}: {e}"))
                        });
                    }
                    let body = resp.text().unwrap_or_default();
                    let body = body.chars().take(200).collect::<String>();
                    if status.is_client_error() {
                        return Err(Error::Protocol(format!("{url}: HTTP {status}: {body}")));
                    }
                    last_error = format!("HTTP {status}: {body}");
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(Error::BackendUnavailable(format!(
            "{url} after {} attempts: {last_error}",
            self.max_retries + 1
        )))
    }
}

impl Backend for HttpBackend {
    fn score(&self, request: &ScoringRequest) -> Result<ScoringResponse> {
        let wire: WireScore = self.post_json("/v1/score", request)?;
        Ok(ScoringResponse {
            logprob: wire.logprob,
            tokens: wire.tokens,
        })
    }

    fn score_batch(&self, requests: &[ScoringRequest]) -> Result<Vec<ScoringResponse>> {
        if requests.is_empty() {
            return Ok(Vec::new());
        }
        let wire: WireBatch = self.post_json("/v1/score_batch", &BatchBody { requests })?;
        if wire.results.len() != requests.len() {
            return Err(Error::Protocol(format!(
                "batch returned {} results for {} requests",
                wire.results.len(),
                requests.len()
            )));
        }
        Ok(wire
            .results
            .into_iter()
            .map(|w| ScoringResponse { logprob: w.logprob, tokens: w.tokens })
            .collect())
    }
}
