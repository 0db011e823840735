//! Serves a [`SyntheticTopicModel`] over the wire protocol, so the HTTP
//! client and external tooling can be exercised end to end without a real
//! model. Runs on its own thread with a single-threaded runtime; handlers
//! parse bodies manually so malformed JSON reliably yields HTTP 400 (a
//! well-formed request the model rejects yields 422).

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::Json;
use axum::routing::post;
use axum::Router;
use serde_json::{json, Value};

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::modelio::{Backend, ScoringRequest, SyntheticTopicModel};

type Reply = (StatusCode, Json<Value>);

fn bad_request(message: impl std::fmt::Display) -> Reply {
    (StatusCode::BAD_REQUEST, Json(json!({ "error": message.to_string() })))
}

fn unprocessable(message: impl std::fmt::Display) -> Reply {
    (
        StatusCode::UNPROCESSABLE_ENTITY,
        Json(json!({ "error": message.to_string() })),
    )
}

async fn score(State(model): State<Arc<SyntheticTopicModel>>, body: Bytes) -> Reply {
    let request: ScoringRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return bad_request(e),
    };
    match model.score(&request) {
        Ok(resp) => (
            StatusCode::OK,
            Json(json!({ "logprob": resp.logprob, "tokens": resp.tokens })),
        ),
        Err(e) => unprocessable(e),
    }
}

#[derive(serde::Deserialize)]
struct BatchBody {
    requests: Vec<ScoringRequest>,
}

async fn score_batch(State(model): State<Arc<SyntheticTopicModel>>, body: Bytes) -> Reply {
    let batch: BatchBody = match serde_json::from_slice(&body) {
        Ok(b) => b,
        Err(e) => return bad_request(e),
    };
    match model.score_batch(&batch.requests) {
        Ok(resps) => {
            let results: Vec<Value> = resps
                .iter()
                .map(|r| json!({ "logprob": r.logprob, "tokens": r.tokens }))
                .collect();
            (StatusCode::OK, Json(json!({ "results": results })))
        }
        Err(e) => unprocessable(e),
    }
}

pub struct MockServer {
    addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    handle: Option<JoinHandle<()>>,
}

/// Binds `127.0.0.1:port` (0 picks a free port) and serves the model until
/// the returned handle is dropped or shut down.
pub fn serve_mock(model: SyntheticTopicModel, port: u16) -> Result<MockServer> {
    let listener = std::net::TcpListener::bind(("127.0.0.1", port))
        .map_err(|e| Error::BackendUnavailable(format!("bind port {port}: {e}")))?;
    listener
        .set_nonblocking(true)
        .map_err(|e| Error::BackendUnavailable(e.to_string()))?;
    let addr = listener
        .local_addr()
        .map_err(|e| Error::BackendUnavailable(e.to_string()))?;

    let app = Router::new()
        .route("/v1/score", post(score))
        .route("/v1/score_batch", post(score_batch))
        .with_state(Arc::new(model));

    let (shutdown_tx, shutdown_rx) = tokio::sync::oneshot::channel::<()>();
    let handle = std::thread::Builder::new()
        .name("mock-server".into())
        .spawn(move || {
            let rt = tokio::runtime::Builder::new_current_thread()
                .enable_io()
                .enable_time()
                .build()
                .expect("mock server runtime");
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener)
                    .expect("mock server listener");
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = shutdown_rx.await;
                    })
                    .await
                    .expect("mock server loop");
            });
        })
        .map_err(|e| Error::BackendUnavailable(e.to_string()))?;

    Ok(MockServer {
        addr,
        shutdown: Some(shutdown_tx),
        handle: Some(handle),
    })
}

impl MockServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting connections and joins the server thread.
    pub fn shutdown(mut self) {
        self.stop();
    }

    /// Blocks forever serving requests (for the CLI); shutdown then only
    /// happens via process signals.
    pub fn serve_forever(mut self) {
        // Hold the sender for the duration of the join: dropping it would
        // resolve the graceful-shutdown future and stop the server.
        let _keep_alive = self.shutdown.take();
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }

    fn stop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Label tokens a served mock should accept for a dataset: the base
/// verbalizer plus any per-tier overrides. Seeded renamings are not
/// knowable at serve time; runs that rename labels need the in-process
/// backend.
pub fn served_vocabulary(dataset: &Dataset) -> Vec<String> {
    let mut vocab: Vec<String> = dataset.verbalizer.tokens().to_vec();
    for spec in dataset.templates.values() {
        if let Some(tokens) = &spec.verbalizer {
            for tok in tokens {
                if !vocab.contains(tok) {
                    vocab.push(tok.clone());
                }
            }
        }
    }
    vocab
}
