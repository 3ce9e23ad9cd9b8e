//! Human annotation CSV: the ratings metrics are validated against.
//!
//! Expected header:
//!
//! ```text
//! sample_id,model_id,task,direction,dimension,score,annotator_id
//! ```
//!
//! `dimension` is `appropriateness` or `style_strength`, `score` is a finite
//! value in 0..=100. Multiple annotators may rate the same cell; averaging
//! happens later when the score matrix is built.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use styleval_core::corpus::SampleId;
use styleval_core::stats::{Dimension, HumanAnnotation};
use styleval_core::style::{StyleCategory, StyleDirection, StyleTask};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{path} row {row}: {message}")]
    Invalid { path: PathBuf, row: usize, message: String },
}

#[derive(Debug, Deserialize)]
struct RawRow {
    sample_id: String,
    model_id: String,
    task: String,
    direction: String,
    dimension: String,
    score: f64,
    annotator_id: String,
}

pub fn read_human_csv(path: &Path) -> Result<Vec<HumanAnnotation>, AnnotationError> {
    let file = std::fs::File::open(path)
        .map_err(|source| AnnotationError::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<RawRow>().enumerate() {
        // Row 1 is the header, so data rows start at 2.
        let row_no = i + 2;
        let invalid = |message: String| AnnotationError::Invalid {
            path: path.to_path_buf(),
            row: row_no,
            message,
        };
        let raw = row.map_err(|e| AnnotationError::Csv {
            path: path.to_path_buf(),
            message: format!("row {row_no}: {e}"),
        })?;
        let category: StyleCategory = match raw.task.as_str() {
            "formality" => StyleCategory::Formality,
            "sentiment" => StyleCategory::Sentiment,
            other => return Err(invalid(format!("unknown task {other:?}"))),
        };
        let direction: StyleDirection = raw
            .direction
            .parse()
            .map_err(|_| invalid(format!("unknown direction {:?}", raw.direction)))?;
        let style = StyleTask::new(category, direction)
            .map_err(|e| invalid(e.to_string()))?;
        let dimension = match raw.dimension.as_str() {
            "appropriateness" => Dimension::Appropriateness,
            "style_strength" => Dimension::StyleStrength,
            other => return Err(invalid(format!("unknown dimension {other:?}"))),
        };
        if !raw.score.is_finite() || !(0.0..=100.0).contains(&raw.score) {
            return Err(invalid(format!("score {} outside 0..=100", raw.score)));
        }
        if raw.annotator_id.trim().is_empty() {
            return Err(invalid("annotator_id is empty".to_string()));
        }
        if raw.sample_id.trim().is_empty() || raw.model_id.trim().is_empty() {
            return Err(invalid("sample_id and model_id must be non-empty".to_string()));
        }
        out.push(HumanAnnotation {
            sample_id: SampleId::new(raw.sample_id),
            model_id: raw.model_id,
            style,
            dimension,
            score: raw.score,
            annotator_id: raw.annotator_id,
        });
    }
    Ok(out)
}

/// Writes annotations in the same shape [`read_human_csv`] expects. Used to
/// produce synthetic annotation files for demos and tests.
pub fn write_human_csv(
    path: &Path,
    annotations: &[HumanAnnotation],
) -> Result<(), AnnotationError> {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    let to_err = |message: String| AnnotationError::Csv { path: path.to_path_buf(), message };
    writer
        .write_record(["sample_id", "model_id", "task", "direction", "dimension", "score", "annotator_id"])
        .map_err(|e| to_err(e.to_string()))?;
    for a in annotations {
        writer
            .write_record([
                a.sample_id.as_str(),
                &a.model_id,
                a.style.category().as_str(),
                a.style.direction().as_str(),
                a.dimension.as_str(),
                &format!("{}", a.score),
                &a.annotator_id,
            ])
            .map_err(|e| to_err(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| to_err(e.to_string()))?;
    crate::stores::write_bytes_atomic(path, &bytes)
        .map_err(|e| to_err(e.to_string()))
}
