//! On-disk artifact stores. Everything the pipeline persists is a sorted
//! JSON Lines file (plus CSV mirrors where a spreadsheet view helps), and
//! every write goes through a temp file and a rename so an interrupted run
//! never leaves a torn store behind. Rewriting a store from the same inputs
//! produces byte-identical files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use styleval_core::corpus::SampleId;
use styleval_core::metrics::MetricRecord;
use styleval_core::style::StyleTask;
use thiserror::Error;

pub const SAMPLES_FILE: &str = "samples.jsonl";
pub const RESPONSES_FILE: &str = "responses.jsonl";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const METRICS_CSV_FILE: &str = "metrics.csv";
pub const CORRELATION_CSV_FILE: &str = "correlation.csv";
pub const CORRELATION_MD_FILE: &str = "correlation.md";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

impl StoreError {
    fn io(path: &Path, source: io::Error) -> Self {
        StoreError::Io { path: path.to_path_buf(), source }
    }
}

/// One generated response for a (sample, model, direction) cell. The prompt
/// digest records exactly what the model was asked, without storing the
/// full prompt in every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyledResponse {
    pub sample_id: SampleId,
    pub model_id: String,
    pub style: StyleTask,
    pub response: String,
    pub prompt_sha256: String,
}

impl StyledResponse {
    pub fn sort_key(&self) -> (SampleId, String, StyleTask) {
        (self.sample_id.clone(), self.model_id.clone(), self.style)
    }
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    let text = fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| StoreError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Like [`read_jsonl`], but a missing file is an empty store — used for
/// resumable stages that merge into whatever already exists.
pub fn read_jsonl_or_empty<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    if path.exists() {
        read_jsonl(path)
    } else {
        Ok(Vec::new())
    }
}

pub fn write_bytes_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| StoreError::io(dir, e))?;
    let file_name = path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default();
    let tmp = dir.join(format!(".tmp-{file_name}"));
    fs::write(&tmp, bytes).map_err(|e| StoreError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| StoreError::io(path, e))
}

pub fn write_text_atomic(path: &Path, text: &str) -> Result<(), StoreError> {
    write_bytes_atomic(path, text.as_bytes())
}

pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    items: impl IntoIterator<Item = &'a T>,
) -> Result<(), StoreError> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("store row serializes"));
        out.push('\n');
    }
    write_bytes_atomic(path, out.as_bytes())
}

/// CSV mirror of the metric store: one row per record, style split into
/// task and direction columns, detail carried as a JSON blob.
pub fn write_metrics_csv(path: &Path, records: &[MetricRecord]) -> Result<(), StoreError> {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    let header = ["sample_id", "model_id", "task", "direction", "metric", "value", "detail"];
    writer.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in records {
        let value = r.value.map(|v| format!("{v}")).unwrap_or_default();
        let detail = if r.detail.is_empty() {
            String::new()
        } else {
            serde_json::to_string(&r.detail).expect("detail serializes")
        };
        writer
            .write_record([
                r.sample_id.as_str(),
                &r.model_id,
                r.style.category().as_str(),
                r.style.direction().as_str(),
                r.metric.as_str(),
                &value,
                &detail,
            ])
            .map_err(|e| csv_err(path, e))?;
    }
    let bytes = writer.into_inner().expect("csv buffer flushes");
    write_bytes_atomic(path, &bytes)
}

fn csv_err(path: &Path, e: csv::Error) -> StoreError {
    StoreError::Io { path: path.to_path_buf(), source: io::Error::other(e) }
}
