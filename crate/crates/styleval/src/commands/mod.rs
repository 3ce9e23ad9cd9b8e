//! The pipeline stages behind the CLI subcommands. Each stage reads the
//! stores earlier stages wrote, does its work, and atomically rewrites its
//! own store, so stages can be re-run and resumed freely.
//!
//! Exit-code contract: `0` on success, `1` when the stage ran but some
//! units failed (artifacts are preserved so a re-run picks up where it
//! left off), `2` for configuration or input errors.

pub mod correlate;
pub mod generate;
pub mod ingest;
pub mod report;
pub mod score;

use std::sync::Arc;

use styleval_core::prompting::{
    GenerationTemplate, JudgeTemplate, DEFAULT_GENERATION_TEMPLATE, DEFAULT_JUDGE_TEMPLATE,
};
use thiserror::Error;

use crate::backends::cache::{sha256_hex, DiskCache};
use crate::backends::{BackendClient, BackendProfile, ClientOptions};
use crate::config::{ConfigError, RunConfig};
use crate::stores::StoreError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Configuration or input problems the user has to fix.
    #[error("{0}")]
    Usage(String),
    /// The stage completed with some units failed; artifacts were kept.
    #[error("{0}")]
    Partial(String),
    /// Hard failure mid-stage.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Partial(_) | CliError::Failed(_) => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Store errors while *writing* artifacts are hard failures; missing input
/// stores are usage errors handled at the call sites.
impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        CliError::Failed(e.to_string())
    }
}

/// Reads a store a previous stage should have produced, turning "file not
/// found" into advice about which stage to run.
pub(crate) fn read_required_store<T: serde::de::DeserializeOwned>(
    path: &std::path::Path,
    produced_by: &str,
) -> Result<Vec<T>, CliError> {
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "{} does not exist; run `styleval {produced_by}` first",
            path.display()
        )));
    }
    crate::stores::read_jsonl(path).map_err(|e| CliError::Failed(e.to_string()))
}

pub(crate) fn shared_cache(
    cfg: &RunConfig,
    no_cache: bool,
) -> Option<Arc<DiskCache>> {
    if no_cache {
        return None;
    }
    cfg.cache_dir.as_ref().map(|dir| Arc::new(DiskCache::new(dir.clone())))
}

pub(crate) fn build_client(
    profile: &BackendProfile,
    cache: Option<Arc<DiskCache>>,
    cfg: &RunConfig,
) -> Result<BackendClient, CliError> {
    BackendClient::new(profile.clone(), ClientOptions { cache, retry: cfg.retry })
        .map_err(|e| CliError::Failed(format!("cannot construct backend client: {e}")))
}

pub(crate) fn load_generation_template(
    cfg: &RunConfig,
) -> Result<GenerationTemplate, CliError> {
    let text = match &cfg.generation_template {
        Some(path) => std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read generation template {}: {e}", path.display()))
        })?,
        None => DEFAULT_GENERATION_TEMPLATE.to_string(),
    };
    GenerationTemplate::parse(text)
        .map_err(|e| CliError::Usage(format!("generation template: {e}")))
}

pub(crate) fn load_judge_template(cfg: &RunConfig) -> Result<JudgeTemplate, CliError> {
    let text = match &cfg.judge_template {
        Some(path) => std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read judge template {}: {e}", path.display()))
        })?,
        None => DEFAULT_JUDGE_TEMPLATE.to_string(),
    };
    JudgeTemplate::parse(text).map_err(|e| CliError::Usage(format!("judge template: {e}")))
}

/// Short content digest used to tie reports to the exact templates used.
pub(crate) fn template_digest(text: &str) -> String {
    sha256_hex(text.as_bytes())[..8].to_string()
}
