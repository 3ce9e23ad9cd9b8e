//! `correlate`: validate metrics against human annotations.
//!
//! For every (direction, metric) pair with data, the human and metric
//! scores are arranged in a samples-by-models grid and correlated sample by
//! sample: the coefficient is computed across models within each sample and
//! then averaged over samples. Both Pearson and Kendall tau-b are reported,
//! plus an `overall` row per metric pooling the per-sample coefficients
//! across directions. Samples with fewer than two paired cells or a
//! constant side are skipped and counted, never silently folded in.

use std::path::PathBuf;

use styleval_core::metrics::{Metric, MetricRecord};
use styleval_core::stats::{
    build_score_matrix, pool_sample_correlations, sample_level_corr, CorrelationKind,
    SampleCorrelation,
};
use styleval_core::style::StyleTask;

use crate::annotations::read_human_csv;
use crate::config::RunConfig;
use crate::stores::{
    write_text_atomic, CORRELATION_CSV_FILE, CORRELATION_MD_FILE, METRICS_FILE,
};

use super::{read_required_store, CliError};

#[derive(Debug, Clone)]
pub struct CorrRow {
    /// A direction name, or `overall` for the pooled row.
    pub scope: String,
    pub metric: Metric,
    pub pearson: Option<f64>,
    pub kendall: Option<f64>,
    pub samples_used: usize,
    pub samples_skipped: usize,
}

#[derive(Debug)]
pub struct CorrelateSummary {
    pub csv_path: PathBuf,
    pub md_path: PathBuf,
    pub rows: Vec<CorrRow>,
}

/// Correlations are rendered scaled to [-100, 100] with one decimal, the
/// same convention the leaderboard uses for scores; `-` marks scopes where
/// every sample was degenerate.
fn fmt_corr(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.1}", v * 100.0),
        None => "-".to_string(),
    }
}

fn corr_pair(
    matrix: &styleval_core::stats::ScoreMatrix,
) -> Result<(SampleCorrelation, SampleCorrelation), CliError> {
    let pearson = sample_level_corr(matrix, CorrelationKind::Pearson)
        .map_err(|e| CliError::Failed(format!("correlation failed: {e}")))?;
    let kendall = sample_level_corr(matrix, CorrelationKind::KendallTau)
        .map_err(|e| CliError::Failed(format!("correlation failed: {e}")))?;
    Ok((pearson, kendall))
}

fn emit_csv(rows: &[CorrRow]) -> String {
    let mut out = String::from("scope,metric,pearson,kendall_tau,samples_used,samples_skipped\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.scope,
            r.metric.as_str(),
            fmt_corr(r.pearson),
            fmt_corr(r.kendall),
            r.samples_used,
            r.samples_skipped
        ));
    }
    out
}

fn emit_markdown(rows: &[CorrRow]) -> String {
    let mut out = String::new();
    out.push_str("| scope | metric | pearson | kendall_tau | samples used | skipped |\n");
    out.push_str("| --- | --- | ---: | ---: | ---: | ---: |\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} |\n",
            r.scope,
            r.metric.as_str(),
            fmt_corr(r.pearson),
            fmt_corr(r.kendall),
            r.samples_used,
            r.samples_skipped
        ));
    }
    out
}

pub fn run(cfg: &RunConfig, human_path: &std::path::Path) -> Result<CorrelateSummary, CliError> {
    let records: Vec<MetricRecord> =
        read_required_store(&cfg.out_path(METRICS_FILE), "score")?;
    let annotations = read_human_csv(human_path).map_err(|e| CliError::Usage(e.to_string()))?;
    if annotations.is_empty() {
        return Err(CliError::Usage(format!(
            "{} contains no annotations",
            human_path.display()
        )));
    }

    let mut rows: Vec<CorrRow> = Vec::new();
    for &metric in &cfg.metrics {
        let mut pooled_pearson: Vec<SampleCorrelation> = Vec::new();
        let mut pooled_kendall: Vec<SampleCorrelation> = Vec::new();
        for &direction in &cfg.directions {
            let style = StyleTask::from_direction(direction);
            let matrix = build_score_matrix(&annotations, &records, style, metric);
            if matrix.n_samples() == 0 || matrix.n_models() < 2 {
                continue;
            }
            let (pearson, kendall) = corr_pair(&matrix)?;
            rows.push(CorrRow {
                scope: direction.as_str().to_string(),
                metric,
                pearson: pearson.mean,
                kendall: kendall.mean,
                samples_used: kendall.samples_used,
                samples_skipped: kendall.samples_skipped,
            });
            pooled_pearson.push(pearson);
            pooled_kendall.push(kendall);
        }
        if !pooled_pearson.is_empty() {
            let pearson =
                pool_sample_correlations(&pooled_pearson.iter().collect::<Vec<_>>());
            let kendall =
                pool_sample_correlations(&pooled_kendall.iter().collect::<Vec<_>>());
            rows.push(CorrRow {
                scope: "overall".to_string(),
                metric,
                pearson: pearson.mean,
                kendall: kendall.mean,
                samples_used: kendall.samples_used,
                samples_skipped: kendall.samples_skipped,
            });
        }
    }

    if rows.is_empty() {
        return Err(CliError::Usage(
            "no (direction, metric) pair has both annotations and at least two models of metric scores"
                .to_string(),
        ));
    }

    let csv_path = cfg.out_path(CORRELATION_CSV_FILE);
    let md_path = cfg.out_path(CORRELATION_MD_FILE);
    write_text_atomic(&csv_path, &emit_csv(&rows))?;
    write_text_atomic(&md_path, &emit_markdown(&rows))?;
    Ok(CorrelateSummary { csv_path, md_path, rows })
}
