//! Dialogue corpus ingestion and evaluation slicing.
//!
//! Two source layouts are understood: plain-text files with one dialogue per
//! line and an explicit turn delimiter, and structured JSON records carrying
//! a `turns` array (either a JSON array of records or one record per line).
//! Both reduce to the same shape: the first turn becomes the query, the
//! second becomes the reference reply, and one sample is taken per dialogue.

use alloc::borrow::ToOwned;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Identifies a source dataset. Anything beyond the two built-in corpora is
/// carried through as a custom name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum DatasetId {
    DailyDialog,
    BlendedSkillTalk,
    Custom(String),
}

impl DatasetId {
    /// Short tag used as the sample id prefix.
    pub fn tag(&self) -> &str {
        match self {
            DatasetId::DailyDialog => "dd",
            DatasetId::BlendedSkillTalk => "bst",
            DatasetId::Custom(name) => name,
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            DatasetId::DailyDialog => "daily_dialog",
            DatasetId::BlendedSkillTalk => "blended_skill_talk",
            DatasetId::Custom(name) => name,
        }
    }
}

impl From<String> for DatasetId {
    fn from(s: String) -> Self {
        match s.as_str() {
            "daily_dialog" => DatasetId::DailyDialog,
            "blended_skill_talk" => DatasetId::BlendedSkillTalk,
            _ => DatasetId::Custom(s),
        }
    }
}

impl From<DatasetId> for String {
    fn from(id: DatasetId) -> Self {
        id.as_str().to_owned()
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Opaque, stable sample identifier. Built from the dataset tag, the sample's
/// position, and a content digest, so re-ingesting the same bytes always
/// reproduces the same ids while distinct contents never collide in practice.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleId(String);

impl SampleId {
    pub fn new(raw: impl Into<String>) -> Self {
        SampleId(raw.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One evaluation sample: a query turn and its human reference reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueSample {
    pub sample_id: SampleId,
    pub dataset_id: DatasetId,
    pub query: String,
    pub reference: String,
}

/// A query/response pair lifted from the corpus tail for few-shot prompting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotExemplar {
    pub query: String,
    pub response: String,
    /// Position of the source dialogue in the ingested sample list (0-based).
    pub source_dialogue_index: usize,
}

/// The evaluation slice plus the exemplars that must stay disjoint from it.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSlice {
    pub samples: Vec<DialogueSample>,
    pub exemplars: Vec<FewShotExemplar>,
}

/// Ingestion result: samples in corpus order plus a count of dialogues that
/// were dropped for having fewer than two usable turns.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestOutcome {
    pub samples: Vec<DialogueSample>,
    pub skipped_dialogues: usize,
}

/// A structured dialogue record as found in JSON corpora. Unknown fields are
/// ignored; a missing `turns` array is reported per record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueRecord {
    #[serde(default)]
    pub turns: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("corpus input is empty")]
    EmptyInput,
    #[error("line {line} is not valid UTF-8")]
    InvalidUtf8 { line: usize },
    #[error("line {line} is not valid JSON: {message}")]
    InvalidJson { line: usize, message: String },
    #[error("record {index} has no `turns` array")]
    MissingTurns { index: usize },
    #[error("slice size must be at least 1")]
    ZeroSlice,
    #[error("requested {requested} samples but only {available} were ingested")]
    NotEnoughSamples { requested: usize, available: usize },
    #[error(
        "cannot keep exemplars disjoint: {total} dialogues cannot cover {requested} eval samples plus {exemplars} exemplar dialogues"
    )]
    ExemplarOverlap {
        total: usize,
        requested: usize,
        exemplars: usize,
    },
}

/// Number of trailing dialogues reserved as few-shot exemplars.
pub const EXEMPLAR_COUNT: usize = 5;

fn make_sample_id(dataset: &DatasetId, index: usize, query: &str, reference: &str) -> SampleId {
    let mut hasher = Sha256::new();
    hasher.update(query.as_bytes());
    hasher.update([0x1f]);
    hasher.update(reference.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(8);
    for byte in &digest[..4] {
        let _ = fmt::Write::write_fmt(&mut hex, format_args!("{byte:02x}"));
    }
    SampleId(alloc::format!("{}-{:06}-{}", dataset.tag(), index, hex))
}

fn sample_from_turns(
    turns: &[&str],
    dataset: &DatasetId,
    index: usize,
) -> Option<DialogueSample> {
    if turns.len() < 2 {
        return None;
    }
    let query = turns[0].to_owned();
    let reference = turns[1].to_owned();
    let sample_id = make_sample_id(dataset, index, &query, &reference);
    Some(DialogueSample {
        sample_id,
        dataset_id: dataset.clone(),
        query,
        reference,
    })
}

/// Ingests a plain-text corpus: one dialogue per line, turns separated by
/// `delimiter`. Turn-internal whitespace is preserved, but each turn is
/// trimmed at its ends and empty turns are dropped. Dialogues left with
/// fewer than two turns are skipped and counted, blank lines are ignored,
/// and undecodable bytes fail with a 1-based line number.
pub fn ingest_daily_dialog(
    raw: &[u8],
    delimiter: &str,
    dataset: DatasetId,
) -> Result<IngestOutcome, CorpusError> {
    let mut samples = Vec::new();
    let mut skipped = 0usize;
    let mut saw_content = false;
    for (line_idx, line_bytes) in raw.split(|&b| b == b'\n').enumerate() {
        let line_bytes = match line_bytes.last() {
            Some(b'\r') => &line_bytes[..line_bytes.len() - 1],
            _ => line_bytes,
        };
        let line = core::str::from_utf8(line_bytes)
            .map_err(|_| CorpusError::InvalidUtf8 { line: line_idx + 1 })?;
        if line.trim().is_empty() {
            continue;
        }
        saw_content = true;
        let turns: Vec<&str> = line
            .split(delimiter)
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .collect();
        match sample_from_turns(&turns, &dataset, samples.len()) {
            Some(sample) => samples.push(sample),
            None => skipped += 1,
        }
    }
    if !saw_content {
        return Err(CorpusError::EmptyInput);
    }
    Ok(IngestOutcome {
        samples,
        skipped_dialogues: skipped,
    })
}

/// Parses a structured JSON corpus into records. Accepts either a top-level
/// JSON array or one JSON object per line; blank lines are ignored.
pub fn parse_dialogue_records(raw: &[u8]) -> Result<Vec<DialogueRecord>, CorpusError> {
    let text = core::str::from_utf8(raw).map_err(|e| {
        let line = raw[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        CorpusError::InvalidUtf8 { line }
    })?;
    if text.trim().is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(|e| CorpusError::InvalidJson {
            line: e.line(),
            message: e.to_string(),
        });
    }
    let mut records = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|e| CorpusError::InvalidJson {
            line: line_idx + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Ingests structured dialogue records. A record without a `turns` array is
/// an error naming the record index (0-based); short dialogues are skipped
/// and counted just like in the plain-text path.
pub fn ingest_structured(
    records: &[DialogueRecord],
    dataset: DatasetId,
) -> Result<IngestOutcome, CorpusError> {
    if records.is_empty() {
        return Err(CorpusError::EmptyInput);
    }
    let mut samples = Vec::new();
    let mut skipped = 0usize;
    for (index, record) in records.iter().enumerate() {
        let turns = record
            .turns
            .as_ref()
            .ok_or(CorpusError::MissingTurns { index })?;
        let turns: Vec<&str> = turns
            .iter()
            .map(|t| t.trim())
            .filter(|t| !t.is_empty())
            .collect();
        match sample_from_turns(&turns, &dataset, samples.len()) {
            Some(sample) => samples.push(sample),
            None => skipped += 1,
        }
    }
    Ok(IngestOutcome {
        samples,
        skipped_dialogues: skipped,
    })
}

/// Takes the first `n` samples for evaluation and lifts exemplars from the
/// final [`EXEMPLAR_COUNT`] dialogues. Fails if the corpus cannot supply both
/// without overlap.
pub fn slice_eval(samples: &[DialogueSample], n: usize) -> Result<EvalSlice, CorpusError> {
    if n == 0 {
        return Err(CorpusError::ZeroSlice);
    }
    if n > samples.len() {
        return Err(CorpusError::NotEnoughSamples {
            requested: n,
            available: samples.len(),
        });
    }
    if samples.len() < n + EXEMPLAR_COUNT {
        return Err(CorpusError::ExemplarOverlap {
            total: samples.len(),
            requested: n,
            exemplars: EXEMPLAR_COUNT,
        });
    }
    let tail_start = samples.len() - EXEMPLAR_COUNT;
    let exemplars = samples[tail_start..]
        .iter()
        .enumerate()
        .map(|(offset, sample)| FewShotExemplar {
            query: sample.query.clone(),
            response: sample.reference.clone(),
            source_dialogue_index: tail_start + offset,
        })
        .collect();
    Ok(EvalSlice {
        samples: samples[..n].to_vec(),
        exemplars,
    })
}
