//! Leaderboard assembly and rendering.
//!
//! Metric records aggregate into one row per model with one cell per
//! (group, metric), where a group is either a whole task or a single
//! direction. Cells carry the mean over scored records plus scored/total
//! coverage, because a model that failed to produce parseable judge replies
//! should not look the same as one that scored poorly. Output formats are
//! CSV, Markdown, and JSON; all three embed a metadata block naming the
//! n-gram settings, backend model names, and template digests so that two
//! reports are comparable only when those match.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{Metric, MetricRecord};
use crate::style::{StyleCategory, StyleDirection};

/// How rows are bucketed into columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    Task,
    Direction,
}

/// One column bucket under a chosen grouping. Ordering is canonical, not
/// alphabetical: tasks before directions, each in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GroupKey {
    Task(StyleCategory),
    Direction(StyleDirection),
}

impl GroupKey {
    pub fn label(self) -> &'static str {
        match self {
            GroupKey::Task(c) => c.as_str(),
            GroupKey::Direction(d) => d.as_str(),
        }
    }

    fn candidates(grouping: Grouping) -> Vec<GroupKey> {
        match grouping {
            Grouping::Task => StyleCategory::ALL.iter().copied().map(GroupKey::Task).collect(),
            Grouping::Direction => StyleDirection::ALL
                .iter()
                .copied()
                .map(GroupKey::Direction)
                .collect(),
        }
    }
}

/// Column order for metrics: style strength first, then the appropriateness
/// family.
pub const METRIC_COLUMN_ORDER: [Metric; 5] = [
    Metric::AccLabelMatch,
    Metric::Judge,
    Metric::NllScore,
    Metric::Bleu,
    Metric::EmbedSim,
];

/// Header label per metric. Accuracy is a percentage of matched labels, so
/// its label says so.
pub fn metric_label(metric: Metric) -> &'static str {
    match metric {
        Metric::AccLabelMatch => "acc_pct",
        Metric::Bleu => "bleu",
        Metric::EmbedSim => "embed_sim",
        Metric::Judge => "judge",
        Metric::NllScore => "nll",
    }
}

/// One aggregated cell. `mean` is over scored records only and is `None`
/// when nothing in the cell was scored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricCell {
    pub mean: Option<f64>,
    pub scored: usize,
    pub total: usize,
}

impl MetricCell {
    pub fn coverage(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.scored as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderboardRow {
    pub model_id: String,
    pub cells: BTreeMap<GroupKey, BTreeMap<Metric, MetricCell>>,
}

impl LeaderboardRow {
    pub fn cell(&self, group: GroupKey, metric: Metric) -> Option<&MetricCell> {
        self.cells.get(&group).and_then(|m| m.get(&metric))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaderboard {
    pub grouping: Grouping,
    pub groups: Vec<GroupKey>,
    pub metrics: Vec<Metric>,
    pub rows: Vec<LeaderboardRow>,
}

/// Row ordering: stable by model id, or by one cell's mean descending with
/// model id as the tiebreak and empty cells last.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowOrder {
    ModelId,
    CellDesc { group: GroupKey, metric: Metric },
}

/// Settings echoed into every report so readers can tell whether two tables
/// are comparable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportMeta {
    pub bleu_signature: String,
    /// model id -> backend model name
    pub backend_models: BTreeMap<String, String>,
    /// template kind -> content digest
    pub template_digests: BTreeMap<String, String>,
}

impl ReportMeta {
    fn lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        if !self.bleu_signature.is_empty() {
            lines.push(format!("bleu: {}", self.bleu_signature));
        }
        for (id, name) in &self.backend_models {
            lines.push(format!("model: {id}={name}"));
        }
        for (kind, digest) in &self.template_digests {
            lines.push(format!("template: {kind}={digest}"));
        }
        lines
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("no metric records to report")]
    EmptyRecords,
    #[error("cannot sort by ({group}, {metric}): that column is not in the report")]
    UnknownSortCell { group: String, metric: Metric },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmitFormat {
    Csv,
    Markdown,
    Json,
}

fn group_of(record: &MetricRecord, grouping: Grouping) -> GroupKey {
    match grouping {
        Grouping::Task => GroupKey::Task(record.style.category()),
        Grouping::Direction => GroupKey::Direction(record.style.direction()),
    }
}

/// Aggregates records into a leaderboard. Accuracy cells display the match
/// rate as a percentage; every other metric displays its plain mean.
pub fn build_leaderboard(
    records: &[MetricRecord],
    grouping: Grouping,
    order: RowOrder,
) -> Result<Leaderboard, ReportError> {
    if records.is_empty() {
        return Err(ReportError::EmptyRecords);
    }

    struct Accum {
        sum: f64,
        scored: usize,
        total: usize,
    }
    let mut cells: BTreeMap<(String, GroupKey, Metric), Accum> = BTreeMap::new();
    for record in records {
        let key = (
            record.model_id.clone(),
            group_of(record, grouping),
            record.metric,
        );
        let accum = cells.entry(key).or_insert(Accum {
            sum: 0.0,
            scored: 0,
            total: 0,
        });
        accum.total += 1;
        if record.is_scored() {
            accum.scored += 1;
            accum.sum += record.value.expect("scored record has a value");
        }
    }

    let groups: Vec<GroupKey> = GroupKey::candidates(grouping)
        .into_iter()
        .filter(|g| cells.keys().any(|(_, key_group, _)| key_group == g))
        .collect();
    let metrics: Vec<Metric> = METRIC_COLUMN_ORDER
        .into_iter()
        .filter(|m| cells.keys().any(|(_, _, key_metric)| key_metric == m))
        .collect();

    let mut model_ids: Vec<String> = cells.keys().map(|(model, _, _)| model.clone()).collect();
    model_ids.sort();
    model_ids.dedup();

    let mut rows: Vec<LeaderboardRow> = model_ids
        .into_iter()
        .map(|model_id| {
            let mut row_cells: BTreeMap<GroupKey, BTreeMap<Metric, MetricCell>> = BTreeMap::new();
            for ((model, group, metric), accum) in &cells {
                if *model != model_id {
                    continue;
                }
                let mean = if accum.scored > 0 {
                    let raw = accum.sum / accum.scored as f64;
                    Some(match metric {
                        Metric::AccLabelMatch => raw * 100.0,
                        _ => raw,
                    })
                } else {
                    None
                };
                row_cells.entry(*group).or_default().insert(
                    *metric,
                    MetricCell {
                        mean,
                        scored: accum.scored,
                        total: accum.total,
                    },
                );
            }
            LeaderboardRow {
                model_id,
                cells: row_cells,
            }
        })
        .collect();

    if let RowOrder::CellDesc { group, metric } = order {
        if !groups.contains(&group) || !metrics.contains(&metric) {
            return Err(ReportError::UnknownSortCell {
                group: group.label().to_owned(),
                metric,
            });
        }
        rows.sort_by(|a, b| {
            let va = a.cell(group, metric).and_then(|c| c.mean);
            let vb = b.cell(group, metric).and_then(|c| c.mean);
            match (va, vb) {
                (Some(x), Some(y)) => y
                    .total_cmp(&x)
                    .then_with(|| a.model_id.cmp(&b.model_id)),
                (Some(_), None) => core::cmp::Ordering::Less,
                (None, Some(_)) => core::cmp::Ordering::Greater,
                (None, None) => a.model_id.cmp(&b.model_id),
            }
        });
    }

    Ok(Leaderboard {
        grouping,
        groups,
        metrics,
        rows,
    })
}

fn fmt_mean(mean: Option<f64>) -> String {
    match mean {
        Some(v) => format!("{v:.1}"),
        None => "-".to_owned(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        let mut out = String::from("\"");
        for c in s.chars() {
            if c == '"' {
                out.push('"');
            }
            out.push(c);
        }
        out.push('"');
        out
    } else {
        s.to_owned()
    }
}

fn column_headers(board: &Leaderboard) -> Vec<String> {
    let mut headers = Vec::new();
    for group in &board.groups {
        for metric in &board.metrics {
            let base = format!("{}:{}", group.label(), metric_label(*metric));
            headers.push(base.clone());
            headers.push(format!("{base}:cov"));
        }
    }
    headers
}

fn emit_csv(board: &Leaderboard, meta: &ReportMeta) -> String {
    let mut out = String::new();
    let mut header = alloc::vec!["model".to_owned()];
    header.extend(column_headers(board));
    out.push_str(&header.join(","));
    out.push('\n');
    for row in &board.rows {
        let mut fields = alloc::vec![csv_field(&row.model_id)];
        for group in &board.groups {
            for metric in &board.metrics {
                match row.cell(*group, *metric) {
                    Some(cell) => {
                        fields.push(fmt_mean(cell.mean));
                        fields.push(format!("{:.2}", cell.coverage()));
                    }
                    None => {
                        fields.push("-".to_owned());
                        fields.push("-".to_owned());
                    }
                }
            }
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    for line in meta.lines() {
        out.push_str("# ");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn emit_markdown(board: &Leaderboard, meta: &ReportMeta) -> String {
    // best mean per column gets bolded; ties all bold
    let mut best: BTreeMap<(GroupKey, Metric), f64> = BTreeMap::new();
    for row in &board.rows {
        for group in &board.groups {
            for metric in &board.metrics {
                if let Some(mean) = row.cell(*group, *metric).and_then(|c| c.mean) {
                    best.entry((*group, *metric))
                        .and_modify(|b| *b = b.max(mean))
                        .or_insert(mean);
                }
            }
        }
    }

    let mut out = String::new();
    let mut header = alloc::vec!["model".to_owned()];
    header.extend(column_headers(board));
    out.push_str("| ");
    out.push_str(&header.join(" | "));
    out.push_str(" |\n|");
    for _ in 0..header.len() {
        out.push_str(" --- |");
    }
    out.push('\n');
    for row in &board.rows {
        let mut fields = alloc::vec![row.model_id.clone()];
        for group in &board.groups {
            for metric in &board.metrics {
                match row.cell(*group, *metric) {
                    Some(cell) => {
                        let rendered = fmt_mean(cell.mean);
                        let is_best = cell
                            .mean
                            .zip(best.get(&(*group, *metric)).copied())
                            .is_some_and(|(mean, top)| mean == top);
                        if is_best {
                            fields.push(format!("**{rendered}**"));
                        } else {
                            fields.push(rendered);
                        }
                        fields.push(format!("{:.2}", cell.coverage()));
                    }
                    None => {
                        fields.push("-".to_owned());
                        fields.push("-".to_owned());
                    }
                }
            }
        }
        out.push_str("| ");
        out.push_str(&fields.join(" | "));
        out.push_str(" |\n");
    }
    let lines = meta.lines();
    if !lines.is_empty() {
        out.push('\n');
        for line in lines {
            out.push_str(&format!("_{line}_\n"));
        }
    }
    out
}

fn emit_json(board: &Leaderboard, meta: &ReportMeta) -> String {
    use serde_json::{json, Value};
    let rows: Vec<Value> = board
        .rows
        .iter()
        .map(|row| {
            let mut cells = serde_json::Map::new();
            for group in &board.groups {
                let mut by_metric = serde_json::Map::new();
                for metric in &board.metrics {
                    if let Some(cell) = row.cell(*group, *metric) {
                        by_metric.insert(
                            metric_label(*metric).to_owned(),
                            json!({
                                "mean": cell.mean,
                                "scored": cell.scored,
                                "total": cell.total,
                                "coverage": cell.coverage(),
                            }),
                        );
                    }
                }
                cells.insert(group.label().to_owned(), Value::Object(by_metric));
            }
            json!({ "model": row.model_id, "cells": Value::Object(cells) })
        })
        .collect();
    let value = json!({
        "grouping": match board.grouping {
            Grouping::Task => "task",
            Grouping::Direction => "direction",
        },
        "groups": board.groups.iter().map(|g| g.label()).collect::<Vec<_>>(),
        "metrics": board.metrics.iter().map(|m| metric_label(*m)).collect::<Vec<_>>(),
        "rows": rows,
        "meta": {
            "bleu": meta.bleu_signature,
            "models": meta.backend_models,
            "templates": meta.template_digests,
        },
    });
    let mut out = serde_json::to_string_pretty(&value).expect("leaderboard json serializes");
    out.push('\n');
    out
}

/// Renders the leaderboard in the chosen format. Output is deterministic:
/// same records, grouping, order, and meta give byte-identical text.
pub fn emit(board: &Leaderboard, meta: &ReportMeta, format: EmitFormat) -> String {
    match format {
        EmitFormat::Csv => emit_csv(board, meta),
        EmitFormat::Markdown => emit_markdown(board, meta),
        EmitFormat::Json => emit_json(board, meta),
    }
}
