//! A local stand-in for every backend the pipeline talks to: one HTTP
//! server speaking all four wire contracts, driven by a script instead of
//! actual models.
//!
//! Each endpoint runs in one of two modes:
//!
//! * `derive` (default) — responses are computed deterministically from a
//!   digest of the request, so repeated runs see identical payloads without
//!   any scripting. Chat requests whose prompt contains the literal
//!   instruction `Score: <integer>` get a judge-style reply ending in a
//!   score line; everything else gets a short pseudo-sentence. Scoring
//!   requests get tokens that exactly tile the text.
//! * `canned` — responses come from a queue of full JSON bodies, consumed
//!   in arrival order.
//!
//! Failure injections (`{"at": N, "status": 503}`) override the Nth arrival
//! at an endpoint, which is how retry and partial-failure paths are
//! exercised. Every request is appended to an in-memory log together with
//! the number of requests in flight at that moment, so tests can assert
//! both "no duplicate requests after a warm start" and "parallelism never
//! exceeded the configured bound".

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use styleval_core::logprob::TokenScore;
use thiserror::Error;

use crate::backends::wire::{
    ChatRequest, ClassifyRequest, EmbedRequest, ScoreRequest, CHAT_PATH, CLASSIFY_PATH,
    EMBED_PATH, SCORE_PATH,
};

#[derive(Debug, Error)]
pub enum MockError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("script.{endpoint}: {message}")]
    BadScript { endpoint: &'static str, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptMode {
    #[default]
    Derive,
    Canned,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureInjection {
    /// 1-based arrival index at this endpoint that fails.
    pub at: u64,
    pub status: u16,
    /// Extra delay before the failure is sent.
    #[serde(default)]
    pub delay_ms: u64,
}

fn default_token_len() -> usize {
    3
}

fn default_true() -> bool {
    true
}

fn default_embed_dim() -> usize {
    8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EndpointScript {
    pub mode: ScriptMode,
    /// Full response bodies, one per request, in the endpoint's wire shape.
    pub canned: Vec<serde_json::Value>,
    pub failures: Vec<FailureInjection>,
    /// Fixed latency added to every response from this endpoint.
    pub latency_ms: u64,
    /// Characters per token in derived scoring responses.
    pub token_len: usize,
    /// Whether derived scoring responses start with a null-logprob sentinel.
    pub sentinel_first: bool,
    /// Vector width of derived embeddings.
    pub embed_dim: usize,
}

impl Default for EndpointScript {
    fn default() -> Self {
        EndpointScript {
            mode: ScriptMode::Derive,
            canned: Vec::new(),
            failures: Vec::new(),
            latency_ms: 0,
            token_len: default_token_len(),
            sentinel_first: default_true(),
            embed_dim: default_embed_dim(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Script {
    pub chat: EndpointScript,
    pub score: EndpointScript,
    pub classify: EndpointScript,
    pub embeddings: EndpointScript,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Endpoint {
    Chat,
    Score,
    Classify,
    Embeddings,
}

impl Endpoint {
    fn name(self) -> &'static str {
        match self {
            Endpoint::Chat => "chat",
            Endpoint::Score => "score",
            Endpoint::Classify => "classify",
            Endpoint::Embeddings => "embeddings",
        }
    }
}

/// One logged request.
#[derive(Debug, Clone, Serialize)]
pub struct RequestEntry {
    /// Global 1-based sequence number.
    pub seq: u64,
    pub endpoint: String,
    /// 1-based arrival index within this endpoint.
    pub arrival: u64,
    /// Requests in flight (including this one) when it arrived.
    pub in_flight: usize,
    /// Compact JSON of the request body.
    pub body: String,
}

struct EndpointState {
    script: EndpointScript,
    arrivals: AtomicU64,
    canned_served: AtomicU64,
}

struct MockState {
    chat: EndpointState,
    score: EndpointState,
    classify: EndpointState,
    embeddings: EndpointState,
    log: Mutex<Vec<RequestEntry>>,
    seq: AtomicU64,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
}

impl MockState {
    fn endpoint(&self, ep: Endpoint) -> &EndpointState {
        match ep {
            Endpoint::Chat => &self.chat,
            Endpoint::Score => &self.score,
            Endpoint::Classify => &self.classify,
            Endpoint::Embeddings => &self.embeddings,
        }
    }
}

struct FlightGuard<'a>(&'a MockState);

impl Drop for FlightGuard<'_> {
    fn drop(&mut self) {
        self.0.in_flight.fetch_sub(1, Ordering::SeqCst);
    }
}

fn json_error(status: StatusCode, message: &str) -> Response {
    (status, Json(serde_json::json!({ "error": message }))).into_response()
}

async fn handle(state: Arc<MockState>, ep: Endpoint, body: serde_json::Value) -> Response {
    let flight = state.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    state.max_in_flight.fetch_max(flight, Ordering::SeqCst);
    let _guard = FlightGuard(&state);

    let endpoint = state.endpoint(ep);
    let arrival = endpoint.arrivals.fetch_add(1, Ordering::SeqCst) + 1;
    let seq = state.seq.fetch_add(1, Ordering::SeqCst) + 1;
    state.log.lock().expect("log lock").push(RequestEntry {
        seq,
        endpoint: ep.name().to_string(),
        arrival,
        in_flight: flight,
        body: body.to_string(),
    });

    let script = &endpoint.script;
    if script.latency_ms > 0 {
        tokio::time::sleep(Duration::from_millis(script.latency_ms)).await;
    }
    if let Some(failure) = script.failures.iter().find(|f| f.at == arrival) {
        if failure.delay_ms > 0 {
            tokio::time::sleep(Duration::from_millis(failure.delay_ms)).await;
        }
        let status = StatusCode::from_u16(failure.status)
            .unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        return json_error(status, "injected failure");
    }

    match script.mode {
        ScriptMode::Canned => {
            let idx = endpoint.canned_served.fetch_add(1, Ordering::SeqCst) as usize;
            match script.canned.get(idx) {
                Some(body) => Json(body.clone()).into_response(),
                None => json_error(
                    StatusCode::INTERNAL_SERVER_ERROR,
                    &format!("mock script for {} exhausted after {idx} responses", ep.name()),
                ),
            }
        }
        ScriptMode::Derive => match derive_response(ep, &body, script) {
            Ok(value) => Json(value).into_response(),
            Err(message) => json_error(StatusCode::BAD_REQUEST, &message),
        },
    }
}

fn digest32(parts: &[&str]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            hasher.update([0x1f]);
        }
        hasher.update(part.as_bytes());
    }
    hasher.finalize().into()
}

const WORDS: [&str; 16] = [
    "well", "sure", "maybe", "honestly", "that", "sounds", "like", "a", "plan", "today",
    "thanks", "again", "perhaps", "we", "should", "go",
];

fn pseudo_sentence(digest: &[u8; 32]) -> String {
    let len = 6 + (digest[0] % 6) as usize;
    let mut words = Vec::with_capacity(len);
    for i in 0..len {
        words.push(WORDS[(digest[1 + (i % 30)] % 16) as usize]);
    }
    let mut text = words.join(" ");
    text.push('.');
    let mut chars = text.chars();
    let first = chars.next().expect("sentence is non-empty").to_uppercase();
    format!("{}{}", first.collect::<String>(), chars.as_str())
}

fn derive_chat(body: &serde_json::Value) -> Result<serde_json::Value, String> {
    let req: ChatRequest =
        serde_json::from_value(body.clone()).map_err(|e| format!("bad chat request: {e}"))?;
    let content = req
        .messages
        .last()
        .map(|m| m.content.as_str())
        .ok_or_else(|| "chat request has no messages".to_string())?;
    let digest = digest32(&[&req.model, content]);
    let text = if content.contains("Score: <integer>") {
        let score = u32::from(digest[0]) % 101;
        format!("The reply fits the exchange and reads naturally.\nScore: {score}")
    } else {
        pseudo_sentence(&digest)
    };
    Ok(serde_json::json!({
        "choices": [{ "message": { "role": "assistant", "content": text } }]
    }))
}

fn derive_score(
    body: &serde_json::Value,
    script: &EndpointScript,
) -> Result<serde_json::Value, String> {
    let req: ScoreRequest =
        serde_json::from_value(body.clone()).map_err(|e| format!("bad score request: {e}"))?;
    let digest = digest32(&[&req.model, &req.text]);
    let chars: Vec<char> = req.text.chars().collect();
    let mut tokens: Vec<TokenScore> = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while start < chars.len() {
        let end = (start + script.token_len).min(chars.len());
        let text: String = chars[start..end].iter().collect();
        let logprob = -(0.35 + f64::from(digest[i % 32]) / 512.0);
        tokens.push(TokenScore { text, logprob: Some(logprob), start, end });
        start = end;
        i += 1;
    }
    // The sentinel is the first token scored without context: it keeps its
    // span but carries no log probability.
    if script.sentinel_first {
        if let Some(first) = tokens.first_mut() {
            first.logprob = None;
        }
    }
    Ok(serde_json::json!({ "tokens": tokens }))
}

fn derive_classify(body: &serde_json::Value) -> Result<serde_json::Value, String> {
    let req: ClassifyRequest =
        serde_json::from_value(body.clone()).map_err(|e| format!("bad classify request: {e}"))?;
    let labels: [&str; 2] = match req.task.as_str() {
        "formality" => ["formal", "informal"],
        "sentiment" => ["positive", "negative"],
        other => return Err(format!("unknown task {other:?}")),
    };
    let results: Vec<serde_json::Value> = req
        .texts
        .iter()
        .map(|text| {
            let digest = digest32(&[&req.task, text]);
            let label = labels[(digest[2] % 2) as usize];
            let confidence = 0.5 + f64::from(digest[3] % 50) / 100.0;
            serde_json::json!({ "label": label, "confidence": confidence })
        })
        .collect();
    Ok(serde_json::json!({ "results": results }))
}

fn derive_embeddings(
    body: &serde_json::Value,
    script: &EndpointScript,
) -> Result<serde_json::Value, String> {
    let req: EmbedRequest =
        serde_json::from_value(body.clone()).map_err(|e| format!("bad embeddings request: {e}"))?;
    let data: Vec<serde_json::Value> = req
        .input
        .iter()
        .enumerate()
        .map(|(index, text)| {
            let digest = digest32(&[text]);
            let mut embedding = Vec::with_capacity(script.embed_dim);
            // First component is strictly positive so the norm is never 0.
            embedding.push(1.0 + f64::from(digest[0]) / 255.0);
            for k in 1..script.embed_dim {
                embedding.push((f64::from(digest[(k * 5 + 1) % 32]) - 127.5) / 127.5);
            }
            serde_json::json!({ "index": index, "embedding": embedding })
        })
        .collect();
    Ok(serde_json::json!({ "data": data }))
}

fn derive_response(
    ep: Endpoint,
    body: &serde_json::Value,
    script: &EndpointScript,
) -> Result<serde_json::Value, String> {
    match ep {
        Endpoint::Chat => derive_chat(body),
        Endpoint::Score => derive_score(body, script),
        Endpoint::Classify => derive_classify(body),
        Endpoint::Embeddings => derive_embeddings(body, script),
    }
}

fn validate_endpoint(
    name: &'static str,
    ep: Endpoint,
    script: &EndpointScript,
) -> Result<(), MockError> {
    let bad = |message: String| MockError::BadScript { endpoint: name, message };
    if script.token_len == 0 {
        return Err(bad("token_len must be >= 1".into()));
    }
    if script.embed_dim == 0 {
        return Err(bad("embed_dim must be >= 1".into()));
    }
    for (i, f) in script.failures.iter().enumerate() {
        if f.at == 0 {
            return Err(bad(format!("failures[{i}].at is 1-based and must be >= 1")));
        }
        if !(400..=599).contains(&f.status) {
            return Err(bad(format!("failures[{i}].status {} is not an error status", f.status)));
        }
    }
    for (i, body) in script.canned.iter().enumerate() {
        let check = match ep {
            Endpoint::Chat => serde_json::from_value::<crate::backends::wire::ChatResponse>(
                body.clone(),
            )
            .map(|_| ()),
            Endpoint::Score => {
                serde_json::from_value::<crate::backends::wire::ScoreResponse>(body.clone())
                    .map(|_| ())
            }
            Endpoint::Classify => {
                serde_json::from_value::<crate::backends::wire::ClassifyResponse>(body.clone())
                    .map(|_| ())
            }
            Endpoint::Embeddings => {
                serde_json::from_value::<crate::backends::wire::EmbedResponse>(body.clone())
                    .map(|_| ())
            }
        };
        if let Err(e) = check {
            return Err(bad(format!("canned[{i}] is not a valid response body: {e}")));
        }
    }
    Ok(())
}

pub fn validate_script(script: &Script) -> Result<(), MockError> {
    validate_endpoint("chat", Endpoint::Chat, &script.chat)?;
    validate_endpoint("score", Endpoint::Score, &script.score)?;
    validate_endpoint("classify", Endpoint::Classify, &script.classify)?;
    validate_endpoint("embeddings", Endpoint::Embeddings, &script.embeddings)?;
    Ok(())
}

pub struct MockServer {
    addr: std::net::SocketAddr,
    state: Arc<MockState>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<()>,
}

impl MockServer {
    /// Binds `127.0.0.1:port` (0 picks an ephemeral port) and starts serving
    /// the script. The server runs until [`MockServer::shutdown`] or drop.
    pub async fn serve(script: Script, port: u16) -> Result<MockServer, MockError> {
        validate_script(&script)?;
        let state = Arc::new(MockState {
            chat: EndpointState {
                script: script.chat,
                arrivals: AtomicU64::new(0),
                canned_served: AtomicU64::new(0),
            },
            score: EndpointState {
                script: script.score,
                arrivals: AtomicU64::new(0),
                canned_served: AtomicU64::new(0),
            },
            classify: EndpointState {
                script: script.classify,
                arrivals: AtomicU64::new(0),
                canned_served: AtomicU64::new(0),
            },
            embeddings: EndpointState {
                script: script.embeddings,
                arrivals: AtomicU64::new(0),
                canned_served: AtomicU64::new(0),
            },
            log: Mutex::new(Vec::new()),
            seq: AtomicU64::new(0),
            in_flight: AtomicUsize::new(0),
            max_in_flight: AtomicUsize::new(0),
        });

        let app = Router::new()
            .route(CHAT_PATH, post(chat_handler))
            .route(SCORE_PATH, post(score_handler))
            .route(CLASSIFY_PATH, post(classify_handler))
            .route(EMBED_PATH, post(embeddings_handler))
            .fallback(|| async { json_error(StatusCode::NOT_FOUND, "unknown endpoint") })
            .with_state(state.clone());

        let bind_addr = format!("127.0.0.1:{port}");
        let listener = tokio::net::TcpListener::bind(&bind_addr)
            .await
            .map_err(|source| MockError::Bind { addr: bind_addr, source })?;
        let addr = listener.local_addr().expect("bound listener has an address");
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let task = tokio::spawn(async move {
            let server = axum::serve(listener, app).with_graceful_shutdown(async {
                let _ = rx.await;
            });
            if let Err(e) = server.await {
                eprintln!("mock server error: {e}");
            }
        });
        Ok(MockServer { addr, state, shutdown: Some(tx), task })
    }

    pub fn addr(&self) -> std::net::SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn request_log(&self) -> Vec<RequestEntry> {
        self.state.log.lock().expect("log lock").clone()
    }

    pub fn request_count(&self) -> u64 {
        self.state.seq.load(Ordering::SeqCst)
    }

    /// Highest number of simultaneously in-flight requests observed.
    pub fn max_in_flight(&self) -> usize {
        self.state.max_in_flight.load(Ordering::SeqCst)
    }

    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.task).await;
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task.abort();
    }
}

async fn chat_handler(
    State(state): State<Arc<MockState>>,
    Json(body): Json<serde_json::Value>,
) -> Response {
    handle(state, Endpoint::Chat, body).await
}

async fn score_handler(
    State(state): State<Arc<MockState>>,
    Json(body): Json<serde_json::Value>,
) -> Response {
    handle(state, Endpoint::Score, body).await
}

async fn classify_handler(
    State(state): State<Arc<MockState>>,
    Json(body): Json<serde_json::Value>,
) -> Response {
    handle(state, Endpoint::Classify, body).await
}

async fn embeddings_handler(
    State(state): State<Arc<MockState>>,
    Json(body): Json<serde_json::Value>,
) -> Response {
    handle(state, Endpoint::Embeddings, body).await
}
