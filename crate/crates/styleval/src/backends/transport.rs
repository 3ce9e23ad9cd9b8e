//! The two ways a backend call actually happens: an HTTP POST against a
//! server speaking the wire contracts, or a lookup in a local fixture file.
//!
//! Fixture formats (one backend role per file):
//!
//! * chat / judge — JSON Lines, `{"prompt_sha256": "<hex>", "text": "..."}`
//! * log-probabilities — JSON Lines, `{"text_sha256": "<hex>", "tokens": [...]}`
//!   with tokens in the `/v1/score` shape
//! * embeddings — JSON Lines, `{"text_sha256": "<hex>", "embedding": [...]}`
//! * classifier — TSV `index<TAB>label<TAB>confidence`; each call consumes
//!   the next block of rows in order, and `index` restarts at 0 per call
//!
//! Keying chat and scoring fixtures by content digest keeps the files
//! readable in a diff while staying exact about which prompt or text a row
//! answers.

use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;
use styleval_core::logprob::TokenScore;

use super::cache::sha256_hex;
use super::wire::{EmbedItem, LabelScore};
use super::BackendError;

pub(crate) struct HttpTransport {
    base: String,
    client: reqwest::Client,
}

impl HttpTransport {
    pub(crate) fn new(base: String) -> Result<Self, BackendError> {
        let client = reqwest::Client::builder()
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(HttpTransport { base, client })
    }

    /// POST `body` to `path`, returning the raw response bytes on 2xx. The
    /// bearer token, when present, travels only in the header — errors carry
    /// the response status and a short body excerpt, never the key.
    pub(crate) async fn round_trip(
        &self,
        path: &str,
        body: &serde_json::Value,
        timeout: Duration,
        api_key: Option<&str>,
    ) -> Result<Vec<u8>, BackendError> {
        let url = format!("{}{}", self.base, path);
        let mut req = self.client.post(&url).json(body).timeout(timeout);
        if let Some(key) = api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        let bytes =
            resp.bytes().await.map_err(|e| BackendError::Transport(e.to_string()))?.to_vec();
        if status.is_success() {
            Ok(bytes)
        } else {
            let excerpt: String =
                String::from_utf8_lossy(&bytes).chars().take(200).collect();
            Err(BackendError::Http { status: status.as_u16(), excerpt })
        }
    }
}

#[derive(Deserialize)]
struct CompletionRow {
    prompt_sha256: String,
    text: String,
}

#[derive(Deserialize)]
struct TokensRow {
    text_sha256: String,
    tokens: Vec<TokenScore>,
}

#[derive(Deserialize)]
struct EmbeddingRow {
    text_sha256: String,
    embedding: Vec<f64>,
}

pub(crate) struct FileTransport {
    path: PathBuf,
    /// How many classifier rows earlier calls already consumed.
    classify_cursor: Mutex<usize>,
}

impl FileTransport {
    pub(crate) fn new(path: PathBuf) -> Self {
        FileTransport { path, classify_cursor: Mutex::new(0) }
    }

    fn read(&self) -> Result<String, BackendError> {
        std::fs::read_to_string(&self.path).map_err(BackendError::Io)
    }

    fn rows<T: serde::de::DeserializeOwned>(&self) -> Result<Vec<T>, BackendError> {
        let text = self.read()?;
        text.lines()
            .enumerate()
            .filter(|(_, line)| !line.trim().is_empty())
            .map(|(i, line)| {
                serde_json::from_str(line).map_err(|e| {
                    BackendError::Decode(format!(
                        "{}:{}: {e}",
                        self.path.display(),
                        i + 1
                    ))
                })
            })
            .collect()
    }

    pub(crate) fn completion(&self, prompt: &str) -> Result<String, BackendError> {
        let digest = sha256_hex(prompt.as_bytes());
        let rows: Vec<CompletionRow> = self.rows()?;
        rows.into_iter()
            .find(|r| r.prompt_sha256 == digest)
            .map(|r| r.text)
            .ok_or(BackendError::FixtureMiss { digest })
    }

    pub(crate) fn tokens(&self, text: &str) -> Result<Vec<TokenScore>, BackendError> {
        let digest = sha256_hex(text.as_bytes());
        let rows: Vec<TokensRow> = self.rows()?;
        rows.into_iter()
            .find(|r| r.text_sha256 == digest)
            .map(|r| r.tokens)
            .ok_or(BackendError::FixtureMiss { digest })
    }

    pub(crate) fn embeddings(&self, texts: &[String]) -> Result<Vec<EmbedItem>, BackendError> {
        let rows: Vec<EmbeddingRow> = self.rows()?;
        texts
            .iter()
            .enumerate()
            .map(|(index, text)| {
                let digest = sha256_hex(text.as_bytes());
                rows.iter()
                    .find(|r| r.text_sha256 == digest)
                    .map(|r| EmbedItem { index, embedding: r.embedding.clone() })
                    .ok_or(BackendError::FixtureMiss { digest })
            })
            .collect()
    }

    /// Take the next `count` classifier rows. Row indices restart at 0 for
    /// every call, which catches fixtures drifting out of step with the
    /// request sequence.
    pub(crate) fn classify_rows(&self, count: usize) -> Result<Vec<LabelScore>, BackendError> {
        let text = self.read()?;
        let all: Vec<(usize, String, f64)> = text
            .lines()
            .enumerate()
            .filter(|(_, line)| !line.trim().is_empty())
            .map(|(i, line)| {
                let missing = || {
                    BackendError::Decode(format!(
                        "{}:{}: expected index<TAB>label<TAB>confidence",
                        self.path.display(),
                        i + 1
                    ))
                };
                let mut parts = line.split('\t');
                let idx: usize =
                    parts.next().ok_or_else(missing)?.trim().parse().map_err(|e| {
                        BackendError::Decode(format!(
                            "{}:{}: bad index: {e}",
                            self.path.display(),
                            i + 1
                        ))
                    })?;
                let label = parts.next().ok_or_else(&missing)?.trim().to_string();
                let confidence: f64 =
                    parts.next().ok_or_else(&missing)?.trim().parse().map_err(|e| {
                        BackendError::Decode(format!(
                            "{}:{}: bad confidence: {e}",
                            self.path.display(),
                            i + 1
                        ))
                    })?;
                Ok((idx, label, confidence))
            })
            .collect::<Result<_, BackendError>>()?;

        let mut cursor = self.classify_cursor.lock().expect("cursor lock");
        if *cursor + count > all.len() {
            return Err(BackendError::Contract(format!(
                "classifier fixture exhausted: need {count} rows at offset {}, file has {}",
                *cursor,
                all.len()
            )));
        }
        let block = &all[*cursor..*cursor + count];
        for (pos, (idx, _, _)) in block.iter().enumerate() {
            if *idx != pos {
                return Err(BackendError::Contract(format!(
                    "classifier fixture row {} has index {idx}, expected {pos}",
                    *cursor + pos + 1
                )));
            }
        }
        *cursor += count;
        Ok(block
            .iter()
            .map(|(_, label, confidence)| LabelScore {
                label: label.clone(),
                confidence: *confidence,
            })
            .collect())
    }
}
