//! TOML run configuration: datasets, candidate models, scoring backends,
//! prompt templates, and operational knobs. Relative paths are resolved
//! against the directory the config file sits in, so a run directory can be
//! checked out and used from anywhere.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use styleval_core::metrics::Metric;
use styleval_core::style::StyleDirection;
use thiserror::Error;

use crate::backends::{BackendAddr, BackendKind, BackendProfile, LogprobBase, RetryPolicy};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn default_out_dir() -> String {
    "out".to_string()
}

fn default_cache_dir() -> Option<String> {
    Some("cache".to_string())
}

fn default_delimiter() -> String {
    "__eou__".to_string()
}

fn default_max_parallel() -> usize {
    4
}

fn default_classify_batch() -> usize {
    32
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    run: RawRun,
    #[serde(default)]
    dataset: Vec<RawDataset>,
    #[serde(default)]
    model: Vec<RawModel>,
    #[serde(default)]
    backends: RawBackends,
    #[serde(default)]
    templates: RawTemplates,
    #[serde(default)]
    retry: RawRetry,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    eval_samples: usize,
    /// Style directions to evaluate; defaults to all four.
    directions: Option<Vec<String>>,
    /// Metrics to score; defaults to all five.
    metrics: Option<Vec<String>>,
    #[serde(default = "default_out_dir")]
    out_dir: String,
    /// Response cache directory; set to empty string to disable caching.
    #[serde(default = "default_cache_dir")]
    cache_dir: Option<String>,
    #[serde(default = "default_classify_batch")]
    classify_batch: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    id: String,
    kind: RawDatasetKind,
    path: String,
    #[serde(default = "default_delimiter")]
    delimiter: String,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum RawDatasetKind {
    /// One dialogue per line, turns joined by `delimiter`.
    PlainText,
    /// JSON array or JSON Lines of `{"turns": [...]}` records.
    Structured,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    id: String,
    backend: RawBackend,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct RawBackend {
    base_url: String,
    model_name: String,
    #[serde(default)]
    params: BTreeMap<String, toml::Value>,
    #[serde(default)]
    rate_limit_per_s: f64,
    #[serde(default = "default_max_parallel")]
    max_parallel: usize,
    #[serde(default)]
    logprob_base: LogprobBase,
    api_key_env: Option<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawBackends {
    judge: Option<RawBackend>,
    logprob: Option<RawBackend>,
    classifier: Option<RawBackend>,
    embedding: Option<RawBackend>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTemplates {
    generation: Option<String>,
    judge: Option<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRetry {
    max_retries: Option<u32>,
    backoff_ms: Option<u64>,
    timeout_s: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    PlainText,
    Structured,
}

#[derive(Debug, Clone)]
pub struct DatasetConfig {
    pub id: String,
    pub kind: DatasetKind,
    pub path: PathBuf,
    pub delimiter: String,
}

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub id: String,
    pub profile: BackendProfile,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub eval_samples: usize,
    pub directions: Vec<StyleDirection>,
    pub metrics: Vec<Metric>,
    pub out_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub classify_batch: usize,
    pub datasets: Vec<DatasetConfig>,
    pub models: Vec<ModelConfig>,
    pub judge: Option<BackendProfile>,
    pub logprob: Option<BackendProfile>,
    pub classifier: Option<BackendProfile>,
    pub embedding: Option<BackendProfile>,
    pub generation_template: Option<PathBuf>,
    pub judge_template: Option<PathBuf>,
    pub retry: RetryPolicy,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let raw: RawConfig = toml::from_str(&text)
            .map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(raw, base)
    }

    pub fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Checks that every backend the selected metrics need is configured.
    pub fn require_backends(&self, metrics: &[Metric]) -> Result<(), ConfigError> {
        let mut missing = Vec::new();
        for metric in metrics {
            let (present, section) = match metric {
                Metric::AccLabelMatch => (self.classifier.is_some(), "backends.classifier"),
                Metric::Judge => (self.judge.is_some(), "backends.judge"),
                Metric::NllScore => (self.logprob.is_some(), "backends.logprob"),
                Metric::EmbedSim => (self.embedding.is_some(), "backends.embedding"),
                Metric::Bleu => (true, ""),
            };
            if !present {
                missing.push(format!("{} requires [{}]", metric.as_str(), section));
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(missing.join("; ")))
        }
    }
}

pub fn parse_directions(raw: &[String]) -> Result<Vec<StyleDirection>, ConfigError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for s in raw {
        let d: StyleDirection = s.parse().map_err(|_| {
            ConfigError::Invalid(format!(
                "unknown direction {s:?} (expected formal, informal, positive, or negative)"
            ))
        })?;
        if !seen.insert(d.as_str()) {
            return Err(ConfigError::Invalid(format!("direction {s:?} listed twice")));
        }
        out.push(d);
    }
    if out.is_empty() {
        return Err(ConfigError::Invalid("direction list is empty".into()));
    }
    Ok(out)
}

pub fn parse_metrics(raw: &[String]) -> Result<Vec<Metric>, ConfigError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for s in raw {
        let m: Metric = s.parse().map_err(|_| {
            ConfigError::Invalid(format!(
                "unknown metric {s:?} (expected acc_label_match, bleu, embed_sim, judge, or nll_score)"
            ))
        })?;
        if !seen.insert(m.as_str()) {
            return Err(ConfigError::Invalid(format!("metric {s:?} listed twice")));
        }
        out.push(m);
    }
    if out.is_empty() {
        return Err(ConfigError::Invalid("metric list is empty".into()));
    }
    Ok(out)
}

fn resolve_path(base: &Path, raw: &str) -> PathBuf {
    let p = Path::new(raw);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn resolve_backend(
    raw: RawBackend,
    kind: BackendKind,
    base: &Path,
    context: &str,
) -> Result<BackendProfile, ConfigError> {
    if raw.model_name.trim().is_empty() {
        return Err(ConfigError::Invalid(format!("{context}: model_name is empty")));
    }
    if !raw.rate_limit_per_s.is_finite() || raw.rate_limit_per_s < 0.0 {
        return Err(ConfigError::Invalid(format!(
            "{context}: rate_limit_per_s must be a finite value >= 0"
        )));
    }
    if raw.max_parallel == 0 {
        return Err(ConfigError::Invalid(format!("{context}: max_parallel must be >= 1")));
    }
    let addr = match BackendAddr::parse(&raw.base_url) {
        BackendAddr::File(p) => BackendAddr::File(resolve_path(base, &p.to_string_lossy())),
        http => http,
    };
    let mut params = BTreeMap::new();
    for (k, v) in raw.params {
        let json = serde_json::to_value(&v).map_err(|e| {
            ConfigError::Invalid(format!("{context}: parameter {k:?} does not map to JSON: {e}"))
        })?;
        params.insert(k, json);
    }
    Ok(BackendProfile {
        kind,
        addr,
        model: raw.model_name,
        params,
        rate_limit_per_s: raw.rate_limit_per_s,
        max_parallel: raw.max_parallel,
        logprob_base: raw.logprob_base,
        api_key_env: raw.api_key_env,
    })
}

fn resolve(raw: RawConfig, base: &Path) -> Result<RunConfig, ConfigError> {
    if raw.run.eval_samples == 0 {
        return Err(ConfigError::Invalid("run.eval_samples must be >= 1".into()));
    }
    if raw.run.classify_batch == 0 {
        return Err(ConfigError::Invalid("run.classify_batch must be >= 1".into()));
    }
    let directions = match &raw.run.directions {
        Some(list) => parse_directions(list)?,
        None => StyleDirection::ALL.to_vec(),
    };
    let metrics = match &raw.run.metrics {
        Some(list) => parse_metrics(list)?,
        None => Metric::ALL.to_vec(),
    };

    if raw.dataset.is_empty() {
        return Err(ConfigError::Invalid("at least one [[dataset]] is required".into()));
    }
    let mut ids = BTreeSet::new();
    let mut datasets = Vec::new();
    for d in raw.dataset {
        if d.id.trim().is_empty() {
            return Err(ConfigError::Invalid("dataset id is empty".into()));
        }
        if !ids.insert(d.id.clone()) {
            return Err(ConfigError::Invalid(format!("dataset id {:?} listed twice", d.id)));
        }
        if d.kind == RawDatasetKind::PlainText && d.delimiter.is_empty() {
            return Err(ConfigError::Invalid(format!(
                "dataset {:?}: delimiter must be non-empty for plain_text",
                d.id
            )));
        }
        datasets.push(DatasetConfig {
            id: d.id,
            kind: match d.kind {
                RawDatasetKind::PlainText => DatasetKind::PlainText,
                RawDatasetKind::Structured => DatasetKind::Structured,
            },
            path: resolve_path(base, &d.path),
            delimiter: d.delimiter,
        });
    }

    if raw.model.is_empty() {
        return Err(ConfigError::Invalid("at least one [[model]] is required".into()));
    }
    let mut model_ids = BTreeSet::new();
    let mut models = Vec::new();
    for m in raw.model {
        if m.id.trim().is_empty() {
            return Err(ConfigError::Invalid("model id is empty".into()));
        }
        if !model_ids.insert(m.id.clone()) {
            return Err(ConfigError::Invalid(format!("model id {:?} listed twice", m.id)));
        }
        let context = format!("model {:?}", m.id);
        let profile =
            resolve_backend(m.backend, BackendKind::ChatGeneration, base, &context)?;
        models.push(ModelConfig { id: m.id, profile });
    }

    let judge = raw
        .backends
        .judge
        .map(|b| resolve_backend(b, BackendKind::Judge, base, "backends.judge"))
        .transpose()?;
    let logprob = raw
        .backends
        .logprob
        .map(|b| resolve_backend(b, BackendKind::LogprobScoring, base, "backends.logprob"))
        .transpose()?;
    let classifier = raw
        .backends
        .classifier
        .map(|b| resolve_backend(b, BackendKind::StyleClassifier, base, "backends.classifier"))
        .transpose()?;
    let embedding = raw
        .backends
        .embedding
        .map(|b| resolve_backend(b, BackendKind::Embedding, base, "backends.embedding"))
        .transpose()?;

    let retry_defaults = RetryPolicy::default();
    let retry = RetryPolicy {
        max_retries: raw.retry.max_retries.unwrap_or(retry_defaults.max_retries),
        backoff: raw
            .retry
            .backoff_ms
            .map(Duration::from_millis)
            .unwrap_or(retry_defaults.backoff),
        timeout: raw.retry.timeout_s.map(Duration::from_secs).unwrap_or(retry_defaults.timeout),
    };

    Ok(RunConfig {
        eval_samples: raw.run.eval_samples,
        directions,
        metrics,
        out_dir: resolve_path(base, &raw.run.out_dir),
        cache_dir: raw
            .run
            .cache_dir
            .filter(|s| !s.is_empty())
            .map(|s| resolve_path(base, &s)),
        classify_batch: raw.run.classify_batch,
        datasets,
        models,
        judge,
        logprob,
        classifier,
        embedding,
        generation_template: raw.templates.generation.map(|p| resolve_path(base, &p)),
        judge_template: raw.templates.judge.map(|p| resolve_path(base, &p)),
        retry,
    })
}
