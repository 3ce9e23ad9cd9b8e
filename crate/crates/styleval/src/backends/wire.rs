//! Request and response shapes shared by the HTTP clients, the file-backed
//! stand-ins, and the mock server. Every backend speaks one of these four
//! JSON contracts:
//!
//! * `POST /v1/chat/completions` — generation and judging. OpenAI-style
//!   messages in, `choices[0].message.content` out.
//! * `POST /v1/score` — token-level log-probabilities for a full text.
//!   Tokens carry character offsets and must tile the text; the first token
//!   may be a sentinel (`logprob: null`) for backends that cannot score an
//!   unconditioned token.
//! * `POST /v1/classify` — batch style classification. One result per input
//!   text, in order.
//! * `POST /v1/embeddings` — batch embeddings, each result tagged with the
//!   index of the input it belongs to.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use styleval_core::logprob::TokenScore;

pub const CHAT_PATH: &str = "/v1/chat/completions";
pub const SCORE_PATH: &str = "/v1/score";
pub const CLASSIFY_PATH: &str = "/v1/classify";
pub const EMBED_PATH: &str = "/v1/embeddings";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: "user".into(), content: content.into() }
    }
}

/// Extra decoding parameters (`temperature`, `max_tokens`, ...) are carried
/// as a flattened map so per-model settings pass through untouched. The map
/// is a `BTreeMap`, which keeps serialization order — and therefore cache
/// keys — stable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    #[serde(flatten)]
    pub params: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatChoice {
    pub message: ChatMessage,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatResponse {
    pub choices: Vec<ChatChoice>,
}

impl ChatResponse {
    pub fn content(&self) -> Option<&str> {
        self.choices.first().map(|c| c.message.content.as_str())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub model: String,
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub tokens: Vec<TokenScore>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub model: String,
    /// Style task the labels belong to: `"formality"` or `"sentiment"`.
    pub task: String,
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelScore {
    pub label: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub results: Vec<LabelScore>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub model: String,
    pub input: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedItem {
    pub index: usize,
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub data: Vec<EmbedItem>,
}
