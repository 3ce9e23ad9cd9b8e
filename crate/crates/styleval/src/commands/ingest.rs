//! `ingest`: read the configured dialogue corpora and write the sample
//! store. The store is a pure function of the inputs, so re-running ingest
//! rewrites it byte-identically instead of appending.

use std::path::PathBuf;

use styleval_core::corpus::{
    ingest_daily_dialog, ingest_structured, parse_dialogue_records, DatasetId, DialogueSample,
};

use crate::config::{DatasetKind, RunConfig};
use crate::stores::{write_jsonl, SAMPLES_FILE};

use super::CliError;

#[derive(Debug)]
pub struct DatasetIngest {
    pub id: String,
    pub samples: usize,
    pub skipped_dialogues: usize,
}

#[derive(Debug)]
pub struct IngestSummary {
    pub store_path: PathBuf,
    pub per_dataset: Vec<DatasetIngest>,
    pub total_samples: usize,
}

pub fn run(cfg: &RunConfig) -> Result<IngestSummary, CliError> {
    let mut all: Vec<DialogueSample> = Vec::new();
    let mut per_dataset = Vec::new();
    for ds in &cfg.datasets {
        let raw = std::fs::read(&ds.path).map_err(|e| {
            CliError::Usage(format!("dataset {:?}: cannot read {}: {e}", ds.id, ds.path.display()))
        })?;
        let dataset_id = DatasetId::from(ds.id.clone());
        let outcome = match ds.kind {
            DatasetKind::PlainText => ingest_daily_dialog(&raw, &ds.delimiter, dataset_id),
            DatasetKind::Structured => parse_dialogue_records(&raw)
                .and_then(|records| ingest_structured(&records, dataset_id)),
        }
        .map_err(|e| CliError::Usage(format!("dataset {:?}: {e}", ds.id)))?;
        per_dataset.push(DatasetIngest {
            id: ds.id.clone(),
            samples: outcome.samples.len(),
            skipped_dialogues: outcome.skipped_dialogues,
        });
        all.extend(outcome.samples);
    }

    let store_path = cfg.out_path(SAMPLES_FILE);
    write_jsonl(&store_path, &all)?;
    Ok(IngestSummary { store_path, per_dataset, total_samples: all.len() })
}
