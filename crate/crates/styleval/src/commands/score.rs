//! `score`: compute the selected metrics for every response and merge the
//! results into the metric store.
//!
//! Each (sample, model, direction, metric) cell is scored at most once:
//! cells already in the store are skipped on re-runs. Two kinds of negative
//! outcome are handled differently:
//!
//! * content-derived outcomes (unparseable judge reply after one retry,
//!   degenerate NLL, empty responses, broken token partitions) are recorded
//!   as flagged or unscored rows — they are properties of the response, and
//!   re-running would just repeat them;
//! * transient backend failures produce *no* row, so the next run retries
//!   exactly those cells. The stage still writes everything that succeeded
//!   and then exits with the partial-failure code.
//!
//! Classification requests are batched. Chunks are carved from the full
//! per-task response list (not just the unscored ones), so a resumed run
//! re-issues byte-identical chunk requests and the response cache can
//! answer them without touching the network.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use styleval_core::corpus::{DialogueSample, SampleId};
use styleval_core::metrics::bleu::sentence_bleu;
use styleval_core::metrics::judge::extract_judge_score;
use styleval_core::metrics::nll::{build_nll_text, nll_from_token_scores};
use styleval_core::metrics::{
    coverage_by_metric, embedding_similarity, sort_records, Metric, MetricRecord,
    DETAIL_DEGENERATE,
};
use styleval_core::style::StyleCategory;

use crate::backends::BackendClient;
use crate::config::RunConfig;
use crate::stores::{
    read_jsonl_or_empty, write_jsonl, write_metrics_csv, StyledResponse, METRICS_CSV_FILE,
    METRICS_FILE, RESPONSES_FILE, SAMPLES_FILE,
};

use super::{build_client, load_judge_template, read_required_store, shared_cache, CliError};

#[derive(Debug)]
pub struct ScoreSummary {
    pub store_path: PathBuf,
    pub csv_path: PathBuf,
    /// New records written by this run.
    pub computed: usize,
    /// Cells that were already scored and skipped.
    pub reused: usize,
    /// (scored, total) per metric over the merged store.
    pub coverage: Vec<(Metric, usize, usize)>,
}

type HaveSet = BTreeSet<(SampleId, String, Metric, styleval_core::style::StyleTask)>;

struct Stage<'a> {
    cfg: &'a RunConfig,
    samples: BTreeMap<SampleId, DialogueSample>,
    responses: Vec<StyledResponse>,
    have: HaveSet,
    new_records: Vec<MetricRecord>,
    /// Transient failures: cells left unrecorded for a later retry.
    failures: Vec<String>,
}

impl Stage<'_> {
    fn pending(&self, r: &StyledResponse, metric: Metric) -> bool {
        !self.have.contains(&(r.sample_id.clone(), r.model_id.clone(), metric, r.style))
    }

    fn sample(&self, r: &StyledResponse) -> Result<&DialogueSample, CliError> {
        self.samples.get(&r.sample_id).ok_or_else(|| {
            CliError::Usage(format!(
                "response store references unknown sample {}; re-run ingest and generate",
                r.sample_id.as_str()
            ))
        })
    }

    fn fail(&mut self, r: &StyledResponse, metric: Metric, message: impl core::fmt::Display) {
        self.failures.push(format!(
            "{}/{}/{}/{}: {message}",
            r.sample_id.as_str(),
            r.model_id,
            r.style.direction().as_str(),
            metric.as_str()
        ));
    }

    fn push(&mut self, record: MetricRecord) {
        self.new_records.push(record);
    }

    fn score_bleu(&mut self) -> Result<(), CliError> {
        let pending: Vec<StyledResponse> = self
            .responses
            .iter()
            .filter(|r| self.pending(r, Metric::Bleu))
            .cloned()
            .collect();
        for r in pending {
            let reference = self.sample(&r)?.reference.clone();
            let record = match sentence_bleu(&r.response, &reference) {
                Ok(bleu) => {
                    let rec = MetricRecord::scored(
                        r.sample_id.clone(),
                        r.model_id.clone(),
                        r.style,
                        Metric::Bleu,
                        bleu.score,
                    );
                    // An empty hypothesis scores 0 and stays in the mean;
                    // the flag keeps the cause visible.
                    if bleu.degenerate {
                        rec.with_flag("empty_response")
                    } else {
                        rec
                    }
                }
                Err(e) => MetricRecord::unscored(
                    r.sample_id.clone(),
                    r.model_id.clone(),
                    r.style,
                    Metric::Bleu,
                    "empty_reference",
                )
                .with_detail("error", serde_json::Value::String(e.to_string())),
            };
            self.push(record);
        }
        Ok(())
    }

    async fn score_acc(&mut self, client: &BackendClient) -> Result<(), CliError> {
        for category in StyleCategory::ALL {
            // Chunk over every non-empty response of this task so chunk
            // boundaries — and therefore request bodies and cache keys —
            // do not depend on which cells are already scored.
            let all_cat: Vec<StyledResponse> = self
                .responses
                .iter()
                .filter(|r| r.style.category() == category && !r.response.trim().is_empty())
                .cloned()
                .collect();
            for chunk in all_cat.chunks(self.cfg.classify_batch) {
                if !chunk.iter().any(|r| self.pending(r, Metric::AccLabelMatch)) {
                    continue;
                }
                let texts: Vec<String> = chunk.iter().map(|r| r.response.clone()).collect();
                match client.classify(category, &texts).await {
                    Ok(results) => {
                        for (r, verdict) in chunk.iter().zip(results) {
                            if !self.pending(r, Metric::AccLabelMatch) {
                                continue;
                            }
                            let hit = verdict.label == r.style.direction();
                            let record = MetricRecord::scored(
                                r.sample_id.clone(),
                                r.model_id.clone(),
                                r.style,
                                Metric::AccLabelMatch,
                                if hit { 1.0 } else { 0.0 },
                            )
                            .with_detail(
                                "predicted_label",
                                serde_json::Value::String(verdict.label.as_str().to_owned()),
                            )
                            .with_detail(
                                "confidence",
                                serde_json::json!(verdict.confidence),
                            );
                            self.push(record);
                        }
                    }
                    Err(e) => {
                        let failing: Vec<String> = chunk
                            .iter()
                            .filter(|r| self.pending(r, Metric::AccLabelMatch))
                            .map(|r| {
                                format!(
                                    "{}/{}/{}/acc_label_match: {e}",
                                    r.sample_id.as_str(),
                                    r.model_id,
                                    r.style.direction().as_str()
                                )
                            })
                            .collect();
                        self.failures.extend(failing);
                    }
                }
            }
        }
        // Empty responses never match the target style; no backend call.
        let empties: Vec<StyledResponse> = self
            .responses
            .iter()
            .filter(|r| r.response.trim().is_empty() && self.pending(r, Metric::AccLabelMatch))
            .cloned()
            .collect();
        for r in empties {
            let record = MetricRecord::scored(
                r.sample_id.clone(),
                r.model_id.clone(),
                r.style,
                Metric::AccLabelMatch,
                0.0,
            )
            .with_flag("empty_response");
            self.push(record);
        }
        Ok(())
    }

    async fn score_judge(&mut self, client: &BackendClient) -> Result<(), CliError> {
        let template = load_judge_template(self.cfg)?;
        let pending: Vec<StyledResponse> = self
            .responses
            .iter()
            .filter(|r| self.pending(r, Metric::Judge))
            .cloned()
            .collect();
        for r in pending {
            if r.response.trim().is_empty() {
                // Nothing to grade: worst appropriateness, no backend call.
                let record = MetricRecord::scored(
                    r.sample_id.clone(),
                    r.model_id.clone(),
                    r.style,
                    Metric::Judge,
                    0.0,
                )
                .with_flag("empty_response");
                self.push(record);
                continue;
            }
            let query = self.sample(&r)?.query.clone();
            let prompt = template
                .render(&query, &r.response)
                .expect("response checked non-empty above");
            let first = match client.judge(&prompt, &BTreeMap::new()).await {
                Ok(text) => text,
                Err(e) => {
                    self.fail(&r, Metric::Judge, e);
                    continue;
                }
            };
            let record = match extract_judge_score(&first) {
                Ok(parsed) => scored_judge(&r, parsed, 1),
                Err(_) => {
                    // One re-sample with a distinct cache key, then give up
                    // on this cell for good.
                    let mut extra = BTreeMap::new();
                    extra.insert("retry".to_string(), serde_json::json!(1));
                    match client.judge(&prompt, &extra).await {
                        Ok(second) => match extract_judge_score(&second) {
                            Ok(parsed) => scored_judge(&r, parsed, 2),
                            Err(_) => MetricRecord::unscored(
                                r.sample_id.clone(),
                                r.model_id.clone(),
                                r.style,
                                Metric::Judge,
                                "judge_parse",
                            )
                            .with_detail("parse_attempts", serde_json::json!(2))
                            .with_detail(
                                "last_reply_excerpt",
                                serde_json::Value::String(
                                    second.chars().take(120).collect::<String>(),
                                ),
                            ),
                        },
                        Err(e) => {
                            self.fail(&r, Metric::Judge, e);
                            continue;
                        }
                    }
                }
            };
            self.push(record);
        }
        Ok(())
    }

    async fn score_nll(&mut self, client: &BackendClient) -> Result<(), CliError> {
        let pending: Vec<StyledResponse> = self
            .responses
            .iter()
            .filter(|r| self.pending(r, Metric::NllScore))
            .cloned()
            .collect();
        for r in pending {
            if r.response.trim().is_empty() {
                let record = MetricRecord::unscored(
                    r.sample_id.clone(),
                    r.model_id.clone(),
                    r.style,
                    Metric::NllScore,
                    "empty_response",
                );
                self.push(record);
                continue;
            }
            let query = self.sample(&r)?.query.clone();
            let combined =
                build_nll_text(&query, &r.response).expect("response checked non-empty above");
            let tokens = match client.score_logprobs(&combined.text).await {
                Ok(tokens) => tokens,
                Err(e) => {
                    self.fail(&r, Metric::NllScore, e);
                    continue;
                }
            };
            let record = match nll_from_token_scores(&combined, &tokens) {
                Ok(breakdown) => {
                    let rec = MetricRecord::scored(
                        r.sample_id.clone(),
                        r.model_id.clone(),
                        r.style,
                        Metric::NllScore,
                        breakdown.score,
                    )
                    .with_detail("mean_response_nll", serde_json::json!(breakdown.mean_response_nll))
                    .with_detail(
                        "response_token_count",
                        serde_json::json!(breakdown.response_token_count),
                    );
                    if breakdown.degenerate {
                        // Capped score: keep the value visible but out of
                        // means and coverage.
                        rec.with_flag(DETAIL_DEGENERATE)
                    } else {
                        rec
                    }
                }
                Err(e) => MetricRecord::unscored(
                    r.sample_id.clone(),
                    r.model_id.clone(),
                    r.style,
                    Metric::NllScore,
                    "token_contract",
                )
                .with_detail("error", serde_json::Value::String(e.to_string())),
            };
            self.push(record);
        }
        Ok(())
    }

    async fn score_embed(&mut self, client: &BackendClient) -> Result<(), CliError> {
        let pending: Vec<StyledResponse> = self
            .responses
            .iter()
            .filter(|r| self.pending(r, Metric::EmbedSim))
            .cloned()
            .collect();
        for r in pending {
            if r.response.trim().is_empty() {
                let record = MetricRecord::unscored(
                    r.sample_id.clone(),
                    r.model_id.clone(),
                    r.style,
                    Metric::EmbedSim,
                    "empty_response",
                );
                self.push(record);
                continue;
            }
            let reference = self.sample(&r)?.reference.clone();
            let pair = vec![r.response.clone(), reference];
            let vectors = match client.embed(&pair).await {
                Ok(v) => v,
                Err(e) => {
                    self.fail(&r, Metric::EmbedSim, e);
                    continue;
                }
            };
            let record = match embedding_similarity(&vectors[0], &vectors[1]) {
                Ok(value) => MetricRecord::scored(
                    r.sample_id.clone(),
                    r.model_id.clone(),
                    r.style,
                    Metric::EmbedSim,
                    value,
                ),
                Err(e) => MetricRecord::unscored(
                    r.sample_id.clone(),
                    r.model_id.clone(),
                    r.style,
                    Metric::EmbedSim,
                    "embedding_invalid",
                )
                .with_detail("error", serde_json::Value::String(e.to_string())),
            };
            self.push(record);
        }
        Ok(())
    }
}

fn scored_judge(r: &StyledResponse, parsed: styleval_core::metrics::judge::JudgeScore, attempts: u32) -> MetricRecord {
    let mut rec = MetricRecord::scored(
        r.sample_id.clone(),
        r.model_id.clone(),
        r.style,
        Metric::Judge,
        f64::from(parsed.score),
    );
    if parsed.clamped {
        rec = rec.with_flag("clamped");
    }
    if attempts > 1 {
        rec = rec.with_detail("parse_attempts", serde_json::json!(attempts));
    }
    rec
}

pub async fn run(cfg: &RunConfig, no_cache: bool) -> Result<ScoreSummary, CliError> {
    cfg.require_backends(&cfg.metrics)?;
    let samples: Vec<DialogueSample> =
        read_required_store(&cfg.out_path(SAMPLES_FILE), "ingest")?;
    let responses: Vec<StyledResponse> =
        read_required_store(&cfg.out_path(RESPONSES_FILE), "generate")?;
    let store_path = cfg.out_path(METRICS_FILE);
    let csv_path = cfg.out_path(METRICS_CSV_FILE);
    let existing: Vec<MetricRecord> = read_jsonl_or_empty(&store_path)?;

    let mut stage = Stage {
        cfg,
        samples: samples.into_iter().map(|s| (s.sample_id.clone(), s)).collect(),
        have: existing.iter().map(|r| r.sort_key()).collect(),
        responses,
        new_records: Vec::new(),
        failures: Vec::new(),
    };

    let cache = shared_cache(cfg, no_cache);
    for metric in &cfg.metrics {
        match metric {
            Metric::Bleu => stage.score_bleu()?,
            Metric::AccLabelMatch => {
                let profile = cfg.classifier.as_ref().expect("checked by require_backends");
                let client = build_client(profile, cache.clone(), cfg)?;
                stage.score_acc(&client).await?;
            }
            Metric::Judge => {
                let profile = cfg.judge.as_ref().expect("checked by require_backends");
                let client = build_client(profile, cache.clone(), cfg)?;
                stage.score_judge(&client).await?;
            }
            Metric::NllScore => {
                let profile = cfg.logprob.as_ref().expect("checked by require_backends");
                let client = build_client(profile, cache.clone(), cfg)?;
                stage.score_nll(&client).await?;
            }
            Metric::EmbedSim => {
                let profile = cfg.embedding.as_ref().expect("checked by require_backends");
                let client = build_client(profile, cache.clone(), cfg)?;
                stage.score_embed(&client).await?;
            }
        }
    }

    let computed = stage.new_records.len();
    let selected: BTreeSet<Metric> = cfg.metrics.iter().copied().collect();
    let reused = existing.iter().filter(|r| selected.contains(&r.metric)).count();
    let mut merged = existing;
    merged.extend(stage.new_records);
    sort_records(&mut merged);
    write_jsonl(&store_path, &merged)?;
    write_metrics_csv(&csv_path, &merged)?;

    if !stage.failures.is_empty() {
        stage.failures.sort();
        let shown = stage.failures.iter().take(3).cloned().collect::<Vec<_>>().join("; ");
        return Err(CliError::Partial(format!(
            "{computed} cells scored, {} failed (store kept at {}); first failures: {shown}",
            stage.failures.len(),
            store_path.display()
        )));
    }

    let coverage = coverage_by_metric(&merged)
        .into_iter()
        .map(|(m, (scored, total))| (m, scored, total))
        .collect();
    Ok(ScoreSummary { store_path, csv_path, computed, reused, coverage })
}
