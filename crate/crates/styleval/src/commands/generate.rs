//! `generate`: render style-conditioned prompts for every (sample, model,
//! direction) cell and collect candidate responses.
//!
//! Generation is the fan-out stage: cells are independent, so they run
//! concurrently, bounded per model by the profile's `max_parallel` and
//! `rate_limit_per_s`. Cells already present in the response store are
//! skipped, which together with the response cache makes interrupted runs
//! resumable without duplicate requests. Failed cells are reported and left
//! missing; everything that succeeded is written out regardless.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use styleval_core::corpus::{slice_eval, DatasetId, DialogueSample, SampleId};
use styleval_core::style::{StyleDirection, StyleTask};
use tokio::task::JoinSet;

use crate::backends::cache::sha256_hex;
use crate::backends::BackendClient;
use crate::config::RunConfig;
use crate::stores::{read_jsonl_or_empty, write_jsonl, StyledResponse, RESPONSES_FILE, SAMPLES_FILE};

use super::{build_client, load_generation_template, read_required_store, shared_cache, CliError};

#[derive(Debug)]
pub struct GenerateSummary {
    pub store_path: PathBuf,
    /// Cells generated in this run.
    pub generated: usize,
    /// Cells already present and skipped.
    pub reused: usize,
    pub failed: usize,
}

struct Job {
    sample_id: SampleId,
    model_id: String,
    style: StyleTask,
    prompt: String,
    client: Arc<BackendClient>,
}

/// Samples grouped by dataset in first-appearance order.
fn by_dataset(samples: Vec<DialogueSample>) -> Vec<(DatasetId, Vec<DialogueSample>)> {
    let mut groups: Vec<(DatasetId, Vec<DialogueSample>)> = Vec::new();
    for sample in samples {
        match groups.iter_mut().find(|(id, _)| *id == sample.dataset_id) {
            Some((_, bucket)) => bucket.push(sample),
            None => groups.push((sample.dataset_id.clone(), vec![sample])),
        }
    }
    groups
}

pub async fn run(cfg: &RunConfig, no_cache: bool) -> Result<GenerateSummary, CliError> {
    let template = load_generation_template(cfg)?;
    let samples: Vec<DialogueSample> =
        read_required_store(&cfg.out_path(SAMPLES_FILE), "ingest")?;
    let store_path = cfg.out_path(RESPONSES_FILE);
    let existing: Vec<StyledResponse> = read_jsonl_or_empty(&store_path)?;
    let have: BTreeSet<(SampleId, String, StyleDirection)> = existing
        .iter()
        .map(|r| (r.sample_id.clone(), r.model_id.clone(), r.style.direction()))
        .collect();

    let cache = shared_cache(cfg, no_cache);
    let mut clients: Vec<(String, Arc<BackendClient>)> = Vec::new();
    for model in &cfg.models {
        let client = build_client(&model.profile, cache.clone(), cfg)?;
        clients.push((model.id.clone(), Arc::new(client)));
    }

    let mut jobs: Vec<Job> = Vec::new();
    let mut reused = 0usize;
    for (dataset_id, group) in by_dataset(samples) {
        let slice = slice_eval(&group, cfg.eval_samples).map_err(|e| {
            CliError::Usage(format!("dataset {}: {e}", dataset_id.as_str()))
        })?;
        for sample in &slice.samples {
            for (model_id, client) in &clients {
                for &direction in &cfg.directions {
                    let key = (sample.sample_id.clone(), model_id.clone(), direction);
                    if have.contains(&key) {
                        reused += 1;
                        continue;
                    }
                    jobs.push(Job {
                        sample_id: sample.sample_id.clone(),
                        model_id: model_id.clone(),
                        style: StyleTask::from_direction(direction),
                        prompt: template.render(direction, &slice.exemplars, &sample.query),
                        client: client.clone(),
                    });
                }
            }
        }
    }

    let mut set: JoinSet<(SampleId, String, StyleTask, String, Result<String, String>)> =
        JoinSet::new();
    for job in jobs {
        set.spawn(async move {
            let prompt_sha256 = sha256_hex(job.prompt.as_bytes());
            let outcome = job.client.generate(&job.prompt).await.map_err(|e| e.to_string());
            (job.sample_id, job.model_id, job.style, prompt_sha256, outcome)
        });
    }

    let mut merged = existing;
    let mut generated = 0usize;
    let mut failures: Vec<String> = Vec::new();
    while let Some(joined) = set.join_next().await {
        let (sample_id, model_id, style, prompt_sha256, outcome) =
            joined.expect("generation task does not panic");
        match outcome {
            Ok(response) => {
                generated += 1;
                merged.push(StyledResponse { sample_id, model_id, style, response, prompt_sha256 });
            }
            Err(message) => failures.push(format!(
                "{}/{}/{}: {message}",
                sample_id.as_str(),
                model_id,
                style.direction().as_str()
            )),
        }
    }

    merged.sort_by_key(|r| r.sort_key());
    write_jsonl(&store_path, &merged)?;

    if failures.is_empty() {
        Ok(GenerateSummary { store_path, generated, reused, failed: 0 })
    } else {
        failures.sort();
        let shown = failures.iter().take(3).cloned().collect::<Vec<_>>().join("; ");
        Err(CliError::Partial(format!(
            "{generated} cells generated, {} failed (store kept at {}); first failures: {shown}",
            failures.len(),
            store_path.display()
        )))
    }
}
