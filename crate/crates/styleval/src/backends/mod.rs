//! Backend clients for the five model roles the pipeline talks to:
//! candidate chat models, the judge model, the log-probability scorer, the
//! style classifier, and the embedding model.
//!
//! A [`BackendClient`] wraps one role with the operational plumbing every
//! call shares: a content-addressed response cache, bounded parallelism,
//! request-start spacing for rate limits, and bounded retries with
//! exponential backoff (server errors and transport failures are retried;
//! client errors fail fast). The underlying transport is either HTTP (any
//! server speaking the wire contracts in [`wire`]) or a local fixture file,
//! selected by whether the configured endpoint looks like a URL or a path.
//!
//! API keys are read from the environment at client construction and are
//! sent only as bearer headers — they are never logged and never appear in
//! error values.

pub mod cache;
pub mod transport;
pub mod wire;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use styleval_core::logprob::TokenScore;
use styleval_core::style::{StyleCategory, StyleDirection};
use thiserror::Error;

use cache::{cache_key, DiskCache};
use transport::{FileTransport, HttpTransport};
use wire::{
    ChatMessage, ChatRequest, ChatResponse, ClassifyRequest, ClassifyResponse, EmbedRequest,
    EmbedResponse, ScoreRequest, ScoreResponse, CHAT_PATH, CLASSIFY_PATH, EMBED_PATH, SCORE_PATH,
};

/// Default environment variable holding the bearer token for HTTP backends.
pub const DEFAULT_API_KEY_ENV: &str = "STYLEVAL_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    ChatGeneration,
    Judge,
    LogprobScoring,
    StyleClassifier,
    Embedding,
}

impl core::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            BackendKind::ChatGeneration => "chat_generation",
            BackendKind::Judge => "judge",
            BackendKind::LogprobScoring => "logprob_scoring",
            BackendKind::StyleClassifier => "style_classifier",
            BackendKind::Embedding => "embedding",
        };
        f.write_str(s)
    }
}

/// Base the backend reports log-probabilities in. Scores are converted to
/// nats before any NLL arithmetic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogprobBase {
    #[default]
    E,
    Two,
    Ten,
}

impl LogprobBase {
    fn factor(self) -> f64 {
        match self {
            LogprobBase::E => 1.0,
            LogprobBase::Two => core::f64::consts::LN_2,
            LogprobBase::Ten => core::f64::consts::LN_10,
        }
    }
}

/// Where a backend lives: an HTTP base URL or a fixture file on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendAddr {
    Http(String),
    File(PathBuf),
}

impl BackendAddr {
    /// Strings starting with `http://` or `https://` are URLs; anything else
    /// is treated as a filesystem path.
    pub fn parse(raw: &str) -> BackendAddr {
        if raw.starts_with("http://") || raw.starts_with("https://") {
            BackendAddr::Http(raw.trim_end_matches('/').to_string())
        } else {
            BackendAddr::File(PathBuf::from(raw))
        }
    }
}

#[derive(Debug, Clone)]
pub struct BackendProfile {
    pub kind: BackendKind,
    pub addr: BackendAddr,
    /// Model identifier sent on the wire (and mixed into cache keys).
    pub model: String,
    /// Extra request parameters passed through verbatim on chat calls.
    pub params: BTreeMap<String, serde_json::Value>,
    /// Maximum request starts per second; `0.0` disables spacing.
    pub rate_limit_per_s: f64,
    /// Maximum in-flight requests through this client.
    pub max_parallel: usize,
    pub logprob_base: LogprobBase,
    /// Environment variable holding the API key; `None` uses
    /// [`DEFAULT_API_KEY_ENV`]. Only consulted for HTTP backends.
    pub api_key_env: Option<String>,
}

impl BackendProfile {
    pub fn new(kind: BackendKind, addr: BackendAddr, model: impl Into<String>) -> Self {
        BackendProfile {
            kind,
            addr,
            model: model.into(),
            params: BTreeMap::new(),
            rate_limit_per_s: 0.0,
            max_parallel: 4,
            logprob_base: LogprobBase::E,
            api_key_env: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("{operation} is not served by a {found} backend")]
    WrongKind { operation: &'static str, found: BackendKind },
    #[error("backend returned HTTP {status}: {excerpt}")]
    Http { status: u16, excerpt: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("could not decode backend response: {0}")]
    Decode(String),
    #[error("backend response violates the wire contract: {0}")]
    Contract(String),
    #[error("fixture has no entry for digest {digest}")]
    FixtureMiss { digest: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl BackendError {
    /// Server-side and transport failures are worth retrying; everything
    /// else (4xx, malformed payloads, fixture misses) fails fast.
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Http { status, .. } => (500..=599).contains(status),
            BackendError::Transport(_) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each subsequent attempt.
    pub backoff: Duration,
    /// Per-attempt request timeout.
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            backoff: Duration::from_millis(250),
            timeout: Duration::from_secs(60),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ClientOptions {
    /// Shared response cache; `None` disables caching.
    pub cache: Option<Arc<DiskCache>>,
    pub retry: RetryPolicy,
}

/// One classifier verdict for one text.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: StyleDirection,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StatsSnapshot {
    /// Requests that actually hit the transport (network sends or fixture
    /// reads), including retry attempts.
    pub backend_calls: u64,
    pub cache_hits: u64,
    pub retries: u64,
}

#[derive(Debug, Default)]
struct RequestStats {
    backend_calls: AtomicU64,
    cache_hits: AtomicU64,
    retries: AtomicU64,
}

impl RequestStats {
    fn snapshot(&self) -> StatsSnapshot {
        StatsSnapshot {
            backend_calls: self.backend_calls.load(Ordering::Relaxed),
            cache_hits: self.cache_hits.load(Ordering::Relaxed),
            retries: self.retries.load(Ordering::Relaxed),
        }
    }
}

/// Spaces request starts so at most `rate_limit_per_s` begin per second.
struct StartSpacer {
    interval: Option<Duration>,
    next: tokio::sync::Mutex<Option<tokio::time::Instant>>,
}

impl StartSpacer {
    fn new(rate_per_s: f64) -> Self {
        let interval = if rate_per_s > 0.0 {
            Some(Duration::from_secs_f64(1.0 / rate_per_s))
        } else {
            None
        };
        StartSpacer { interval, next: tokio::sync::Mutex::new(None) }
    }

    async fn wait_turn(&self) {
        let Some(interval) = self.interval else { return };
        let turn = {
            let mut next = self.next.lock().await;
            let now = tokio::time::Instant::now();
            let at = next.map_or(now, |n: tokio::time::Instant| n.max(now));
            *next = Some(at + interval);
            at
        };
        tokio::time::sleep_until(turn).await;
    }
}

enum Transport {
    Http(HttpTransport),
    File(FileTransport),
}

pub struct BackendClient {
    profile: BackendProfile,
    transport: Transport,
    cache: Option<Arc<DiskCache>>,
    spacer: StartSpacer,
    semaphore: tokio::sync::Semaphore,
    retry: RetryPolicy,
    stats: RequestStats,
    api_key: Option<String>,
}

impl BackendClient {
    pub fn new(profile: BackendProfile, options: ClientOptions) -> Result<Self, BackendError> {
        let (transport, api_key) = match &profile.addr {
            BackendAddr::Http(base) => {
                let env = profile.api_key_env.as_deref().unwrap_or(DEFAULT_API_KEY_ENV);
                let key = std::env::var(env).ok().filter(|k| !k.is_empty());
                (Transport::Http(HttpTransport::new(base.clone())?), key)
            }
            BackendAddr::File(path) => (Transport::File(FileTransport::new(path.clone())), None),
        };
        let permits = profile.max_parallel.max(1);
        Ok(BackendClient {
            spacer: StartSpacer::new(profile.rate_limit_per_s),
            semaphore: tokio::sync::Semaphore::new(permits),
            cache: options.cache,
            retry: options.retry,
            stats: RequestStats::default(),
            api_key,
            transport,
            profile,
        })
    }

    pub fn kind(&self) -> BackendKind {
        self.profile.kind
    }

    pub fn model(&self) -> &str {
        &self.profile.model
    }

    pub fn stats(&self) -> StatsSnapshot {
        self.stats.snapshot()
    }

    fn expect_kind(&self, want: BackendKind, operation: &'static str) -> Result<(), BackendError> {
        if self.profile.kind == want {
            Ok(())
        } else {
            Err(BackendError::WrongKind { operation, found: self.profile.kind })
        }
    }

    /// One completion from a candidate chat model.
    pub async fn generate(&self, prompt: &str) -> Result<String, BackendError> {
        self.expect_kind(BackendKind::ChatGeneration, "generate")?;
        self.chat(prompt, &BTreeMap::new()).await
    }

    /// One completion from the judge model. `extra` parameters are merged
    /// over the profile's, which also varies the cache key — passing a
    /// distinct marker forces a fresh sample instead of a cache replay.
    pub async fn judge(
        &self,
        prompt: &str,
        extra: &BTreeMap<String, serde_json::Value>,
    ) -> Result<String, BackendError> {
        self.expect_kind(BackendKind::Judge, "judge")?;
        self.chat(prompt, extra).await
    }

    async fn chat(
        &self,
        prompt: &str,
        extra: &BTreeMap<String, serde_json::Value>,
    ) -> Result<String, BackendError> {
        if let Transport::File(f) = &self.transport {
            self.stats.backend_calls.fetch_add(1, Ordering::Relaxed);
            return f.completion(prompt);
        }
        let mut params = self.profile.params.clone();
        params.extend(extra.iter().map(|(k, v)| (k.clone(), v.clone())));
        let req = ChatRequest {
            model: self.profile.model.clone(),
            messages: vec![ChatMessage::user(prompt)],
            params,
        };
        let body = serde_json::to_value(&req).expect("chat request serializes");
        let bytes = self.call_http("chat", CHAT_PATH, &body).await?;
        let resp: ChatResponse = decode(&bytes)?;
        resp.content()
            .map(str::to_owned)
            .ok_or_else(|| BackendError::Contract("chat response has no choices".into()))
    }

    /// Token-level log-probabilities for `text`, converted to nats.
    pub async fn score_logprobs(&self, text: &str) -> Result<Vec<TokenScore>, BackendError> {
        self.expect_kind(BackendKind::LogprobScoring, "score_logprobs")?;
        let mut tokens = match &self.transport {
            Transport::File(f) => {
                self.stats.backend_calls.fetch_add(1, Ordering::Relaxed);
                f.tokens(text)?
            }
            Transport::Http(_) => {
                let req = ScoreRequest { model: self.profile.model.clone(), text: text.to_owned() };
                let body = serde_json::to_value(&req).expect("score request serializes");
                let bytes = self.call_http("score", SCORE_PATH, &body).await?;
                decode::<ScoreResponse>(&bytes)?.tokens
            }
        };
        let factor = self.profile.logprob_base.factor();
        if factor != 1.0 {
            for t in &mut tokens {
                t.logprob = t.logprob.map(|lp| lp * factor);
            }
        }
        Ok(tokens)
    }

    /// Style labels for a batch of texts, one verdict per text in order.
    pub async fn classify(
        &self,
        category: StyleCategory,
        texts: &[String],
    ) -> Result<Vec<Classification>, BackendError> {
        self.expect_kind(BackendKind::StyleClassifier, "classify")?;
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let raw = match &self.transport {
            Transport::File(f) => {
                self.stats.backend_calls.fetch_add(1, Ordering::Relaxed);
                f.classify_rows(texts.len())?
            }
            Transport::Http(_) => {
                let req = ClassifyRequest {
                    model: self.profile.model.clone(),
                    task: category.as_str().to_owned(),
                    texts: texts.to_vec(),
                };
                let body = serde_json::to_value(&req).expect("classify request serializes");
                let bytes = self.call_http("classify", CLASSIFY_PATH, &body).await?;
                decode::<ClassifyResponse>(&bytes)?.results
            }
        };
        if raw.len() != texts.len() {
            return Err(BackendError::Contract(format!(
                "classifier returned {} results for {} texts",
                raw.len(),
                texts.len()
            )));
        }
        raw.into_iter()
            .map(|r| {
                let label: StyleDirection = r
                    .label
                    .parse()
                    .map_err(|_| BackendError::Contract(format!("unknown label {:?}", r.label)))?;
                if label.category() != category {
                    return Err(BackendError::Contract(format!(
                        "label {:?} does not belong to the {} task",
                        r.label,
                        category.as_str()
                    )));
                }
                if !r.confidence.is_finite() || !(0.0..=1.0).contains(&r.confidence) {
                    return Err(BackendError::Contract(format!(
                        "confidence {} outside [0, 1]",
                        r.confidence
                    )));
                }
                Ok(Classification { label, confidence: r.confidence })
            })
            .collect()
    }

    /// Embeddings for a batch of texts, in input order.
    pub async fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        self.expect_kind(BackendKind::Embedding, "embed")?;
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let mut items = match &self.transport {
            Transport::File(f) => {
                self.stats.backend_calls.fetch_add(1, Ordering::Relaxed);
                f.embeddings(texts)?
            }
            Transport::Http(_) => {
                let req =
                    EmbedRequest { model: self.profile.model.clone(), input: texts.to_vec() };
                let body = serde_json::to_value(&req).expect("embed request serializes");
                let bytes = self.call_http("embed", EMBED_PATH, &body).await?;
                decode::<EmbedResponse>(&bytes)?.data
            }
        };
        if items.len() != texts.len() {
            return Err(BackendError::Contract(format!(
                "embedding backend returned {} vectors for {} texts",
                items.len(),
                texts.len()
            )));
        }
        items.sort_by_key(|i| i.index);
        for (pos, item) in items.iter().enumerate() {
            if item.index != pos {
                return Err(BackendError::Contract(format!(
                    "embedding indices do not cover 0..{} exactly",
                    texts.len()
                )));
            }
            if item.embedding.is_empty() {
                return Err(BackendError::Contract(format!("empty embedding at index {pos}")));
            }
        }
        Ok(items.into_iter().map(|i| i.embedding).collect())
    }

    /// Cache-checked, rate-gated, retrying HTTP round trip.
    async fn call_http(
        &self,
        tag: &str,
        path: &str,
        body: &serde_json::Value,
    ) -> Result<Vec<u8>, BackendError> {
        let Transport::Http(http) = &self.transport else {
            unreachable!("call_http is only reached on the HTTP transport");
        };
        let key = cache_key(tag, &self.profile.model, body);
        if let Some(cache) = &self.cache {
            if let Some(bytes) = cache.get(tag, &key)? {
                self.stats.cache_hits.fetch_add(1, Ordering::Relaxed);
                return Ok(bytes);
            }
        }
        let _permit = self.semaphore.acquire().await.expect("semaphore is never closed");
        self.spacer.wait_turn().await;
        let mut attempt: u32 = 0;
        loop {
            self.stats.backend_calls.fetch_add(1, Ordering::Relaxed);
            match http.round_trip(path, body, self.retry.timeout, self.api_key.as_deref()).await {
                Ok(bytes) => {
                    if let Some(cache) = &self.cache {
                        cache.put(tag, &key, &bytes)?;
                    }
                    return Ok(bytes);
                }
                Err(e) if e.is_retryable() && attempt < self.retry.max_retries => {
                    attempt += 1;
                    self.stats.retries.fetch_add(1, Ordering::Relaxed);
                    let delay = self.retry.backoff.saturating_mul(1 << (attempt - 1).min(16));
                    tokio::time::sleep(delay).await;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

fn decode<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T, BackendError> {
    serde_json::from_slice(bytes).map_err(|e| BackendError::Decode(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file_profile(kind: BackendKind, path: &std::path::Path) -> BackendProfile {
        BackendProfile::new(kind, BackendAddr::File(path.to_path_buf()), "test-model")
    }

    #[test]
    fn addr_parse_distinguishes_urls_from_paths() {
        assert_eq!(
            BackendAddr::parse("http://127.0.0.1:9000/"),
            BackendAddr::Http("http://127.0.0.1:9000".into())
        );
        assert_eq!(
            BackendAddr::parse("https://models.example/api"),
            BackendAddr::Http("https://models.example/api".into())
        );
        assert_eq!(
            BackendAddr::parse("fixtures/chat.jsonl"),
            BackendAddr::File(PathBuf::from("fixtures/chat.jsonl"))
        );
    }

    #[test]
    fn logprob_base_factors() {
        assert_eq!(LogprobBase::E.factor(), 1.0);
        assert!((LogprobBase::Two.factor() - 0.6931471805599453).abs() < 1e-15);
        assert!((LogprobBase::Ten.factor() - 2.302585092994046).abs() < 1e-15);
    }

    #[tokio::test]
    async fn wrong_kind_is_rejected_before_any_io() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing.jsonl");
        let client =
            BackendClient::new(file_profile(BackendKind::Judge, &path), ClientOptions::default())
                .unwrap();
        // The fixture file does not even exist; the kind check fires first.
        let err = client.generate("hello").await.unwrap_err();
        assert!(matches!(
            err,
            BackendError::WrongKind { operation: "generate", found: BackendKind::Judge }
        ));
        let err = client.score_logprobs("x").await.unwrap_err();
        assert!(matches!(err, BackendError::WrongKind { operation: "score_logprobs", .. }));
    }

    #[tokio::test]
    async fn file_chat_lookup_hits_and_misses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chat.jsonl");
        let digest = cache::sha256_hex("the prompt".as_bytes());
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, r#"{{"prompt_sha256":"{digest}","text":"canned reply"}}"#).unwrap();
        let client = BackendClient::new(
            file_profile(BackendKind::ChatGeneration, &path),
            ClientOptions::default(),
        )
        .unwrap();
        assert_eq!(client.generate("the prompt").await.unwrap(), "canned reply");
        let err = client.generate("unknown prompt").await.unwrap_err();
        assert!(matches!(err, BackendError::FixtureMiss { .. }));
        assert_eq!(client.stats().backend_calls, 2);
    }

    #[tokio::test]
    async fn file_logprobs_convert_base_two_to_nats() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("score.jsonl");
        let digest = cache::sha256_hex("abc".as_bytes());
        let tokens = r#"[{"text":"abc","logprob":-2.0,"start":0,"end":3}]"#;
        std::fs::write(&path, format!("{{\"text_sha256\":\"{digest}\",\"tokens\":{tokens}}}\n"))
            .unwrap();
        let mut profile = file_profile(BackendKind::LogprobScoring, &path);
        profile.logprob_base = LogprobBase::Two;
        let client = BackendClient::new(profile, ClientOptions::default()).unwrap();
        let scored = client.score_logprobs("abc").await.unwrap();
        assert!((scored[0].logprob.unwrap() - (-2.0 * core::f64::consts::LN_2)).abs() < 1e-15);
    }

    #[tokio::test]
    async fn classify_validates_labels_against_the_task() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.tsv");
        std::fs::write(&path, "0\tformal\t0.9\n1\tpositive\t0.8\n").unwrap();
        let client = BackendClient::new(
            file_profile(BackendKind::StyleClassifier, &path),
            ClientOptions::default(),
        )
        .unwrap();
        let texts = vec!["a".to_string(), "b".to_string()];
        // First call consumes the matching row; the second row carries a
        // sentiment label under a formality task and must be rejected.
        let err = client.classify(StyleCategory::Formality, &texts).await.unwrap_err();
        assert!(matches!(err, BackendError::Contract(_)), "got {err:?}");
    }

    #[tokio::test]
    async fn classify_consumes_fixture_rows_per_call() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.tsv");
        std::fs::write(&path, "0\tformal\t0.9\n1\tinformal\t0.6\n0\tinformal\t0.7\n").unwrap();
        let client = BackendClient::new(
            file_profile(BackendKind::StyleClassifier, &path),
            ClientOptions::default(),
        )
        .unwrap();
        let two = vec!["a".to_string(), "b".to_string()];
        let one = vec!["c".to_string()];
        let first = client.classify(StyleCategory::Formality, &two).await.unwrap();
        assert_eq!(first[0].label, StyleDirection::Formal);
        assert_eq!(first[1].label, StyleDirection::Informal);
        let second = client.classify(StyleCategory::Formality, &one).await.unwrap();
        assert_eq!(second[0].label, StyleDirection::Informal);
        assert!((second[0].confidence - 0.7).abs() < 1e-12);
        // Fixture exhausted now.
        let err = client.classify(StyleCategory::Formality, &one).await.unwrap_err();
        assert!(matches!(err, BackendError::Contract(_)));
    }

    #[tokio::test]
    async fn embed_looks_up_each_text_by_digest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        let da = cache::sha256_hex(b"first");
        let db = cache::sha256_hex(b"second");
        std::fs::write(
            &path,
            format!(
                "{{\"text_sha256\":\"{da}\",\"embedding\":[1.0,0.0]}}\n{{\"text_sha256\":\"{db}\",\"embedding\":[0.0,2.0]}}\n"
            ),
        )
        .unwrap();
        let client = BackendClient::new(
            file_profile(BackendKind::Embedding, &path),
            ClientOptions::default(),
        )
        .unwrap();
        let got =
            client.embed(&["first".to_string(), "second".to_string()]).await.unwrap();
        assert_eq!(got, vec![vec![1.0, 0.0], vec![0.0, 2.0]]);
    }

    #[tokio::test(start_paused = true)]
    async fn spacer_spreads_request_starts() {
        let spacer = StartSpacer::new(100.0); // 10ms apart
        let t0 = tokio::time::Instant::now();
        spacer.wait_turn().await;
        spacer.wait_turn().await;
        spacer.wait_turn().await;
        let elapsed = t0.elapsed();
        // First turn is immediate; the next two wait 10ms each.
        assert_eq!(elapsed, Duration::from_millis(20));
    }

    #[tokio::test]
    async fn unlimited_spacer_never_waits() {
        let spacer = StartSpacer::new(0.0);
        let t0 = std::time::Instant::now();
        for _ in 0..100 {
            spacer.wait_turn().await;
        }
        assert!(t0.elapsed() < Duration::from_secs(1));
    }

    #[test]
    fn retryability_classification() {
        assert!(BackendError::Http { status: 503, excerpt: String::new() }.is_retryable());
        assert!(BackendError::Transport("reset".into()).is_retryable());
        assert!(!BackendError::Http { status: 401, excerpt: String::new() }.is_retryable());
        assert!(!BackendError::Decode("bad json".into()).is_retryable());
        assert!(!BackendError::FixtureMiss { digest: "d".into() }.is_retryable());
    }
}
