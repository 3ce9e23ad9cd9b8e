//! `report`: aggregate the metric store into a leaderboard and emit it as
//! CSV, Markdown, JSON, or all three. Columns can be grouped by task or by
//! direction, and rows sorted by model id or by one column's mean.

use std::path::PathBuf;

use styleval_core::metrics::bleu::BLEU_SIGNATURE;
use styleval_core::metrics::{Metric, MetricRecord};
use styleval_core::report::{
    build_leaderboard, emit, EmitFormat, GroupKey, Grouping, ReportError, ReportMeta, RowOrder,
};
use styleval_core::style::{StyleCategory, StyleDirection};

use crate::config::RunConfig;
use crate::stores::{write_text_atomic, METRICS_FILE};

use super::{
    load_generation_template, load_judge_template, read_required_store, template_digest, CliError,
};

#[derive(Debug)]
pub struct ReportSummary {
    pub written: Vec<PathBuf>,
    pub models: usize,
}

pub fn parse_grouping(raw: &str) -> Result<Grouping, CliError> {
    match raw {
        "task" => Ok(Grouping::Task),
        "direction" => Ok(Grouping::Direction),
        other => Err(CliError::Usage(format!(
            "unknown grouping {other:?} (expected task or direction)"
        ))),
    }
}

fn parse_group_key(raw: &str, grouping: Grouping) -> Result<GroupKey, CliError> {
    match grouping {
        Grouping::Task => match raw {
            "formality" => Ok(GroupKey::Task(StyleCategory::Formality)),
            "sentiment" => Ok(GroupKey::Task(StyleCategory::Sentiment)),
            other => Err(CliError::Usage(format!(
                "unknown task {other:?} (expected formality or sentiment)"
            ))),
        },
        Grouping::Direction => {
            let d: StyleDirection = raw.parse().map_err(|_| {
                CliError::Usage(format!(
                    "unknown direction {raw:?} (expected formal, informal, positive, or negative)"
                ))
            })?;
            Ok(GroupKey::Direction(d))
        }
    }
}

/// `model`, or `cell:<group>:<metric>` for descending mean of one column,
/// e.g. `cell:formality:judge` under task grouping.
pub fn parse_sort(raw: &str, grouping: Grouping) -> Result<RowOrder, CliError> {
    if raw == "model" {
        return Ok(RowOrder::ModelId);
    }
    if let Some(rest) = raw.strip_prefix("cell:") {
        if let Some((group_raw, metric_raw)) = rest.split_once(':') {
            let group = parse_group_key(group_raw, grouping)?;
            let metric: Metric = metric_raw
                .parse()
                .map_err(|_| CliError::Usage(format!("unknown metric {metric_raw:?}")))?;
            return Ok(RowOrder::CellDesc { group, metric });
        }
    }
    Err(CliError::Usage(format!(
        "unknown sort {raw:?} (expected model or cell:<group>:<metric>)"
    )))
}

pub fn parse_formats(raw: &str) -> Result<Vec<EmitFormat>, CliError> {
    match raw {
        "csv" => Ok(vec![EmitFormat::Csv]),
        "markdown" | "md" => Ok(vec![EmitFormat::Markdown]),
        "json" => Ok(vec![EmitFormat::Json]),
        "all" => Ok(vec![EmitFormat::Csv, EmitFormat::Markdown, EmitFormat::Json]),
        other => Err(CliError::Usage(format!(
            "unknown format {other:?} (expected csv, markdown, json, or all)"
        ))),
    }
}

fn format_file(format: EmitFormat) -> &'static str {
    match format {
        EmitFormat::Csv => "leaderboard.csv",
        EmitFormat::Markdown => "leaderboard.md",
        EmitFormat::Json => "leaderboard.json",
    }
}

pub fn build_meta(cfg: &RunConfig) -> Result<ReportMeta, CliError> {
    let mut meta = ReportMeta::default();
    if cfg.metrics.contains(&Metric::Bleu) {
        meta.bleu_signature = BLEU_SIGNATURE.to_string();
    }
    for model in &cfg.models {
        meta.backend_models.insert(model.id.clone(), model.profile.model.clone());
    }
    let generation = load_generation_template(cfg)?;
    meta.template_digests
        .insert("generation".to_string(), template_digest(generation.text()));
    if cfg.metrics.contains(&Metric::Judge) {
        let judge = load_judge_template(cfg)?;
        meta.template_digests.insert("judge".to_string(), template_digest(judge.text()));
    }
    Ok(meta)
}

pub fn run(
    cfg: &RunConfig,
    grouping: Grouping,
    order: RowOrder,
    formats: &[EmitFormat],
) -> Result<ReportSummary, CliError> {
    let records: Vec<MetricRecord> =
        read_required_store(&cfg.out_path(METRICS_FILE), "score")?;
    let board = build_leaderboard(&records, grouping, order).map_err(|e| match e {
        ReportError::EmptyRecords => {
            CliError::Usage("metric store is empty; run `styleval score` first".to_string())
        }
        ReportError::UnknownSortCell { .. } => CliError::Usage(
            "the requested sort column does not exist in this leaderboard".to_string(),
        ),
    })?;
    let meta = build_meta(cfg)?;

    let mut written = Vec::new();
    for &format in formats {
        let path = cfg.out_path(format_file(format));
        write_text_atomic(&path, &emit(&board, &meta, format))?;
        written.push(path);
    }
    Ok(ReportSummary { written, models: board.rows.len() })
}
