//! Automatic quality metrics and the record type that carries their results.
//!
//! Five metrics are computed per generated response: style-label accuracy
//! against the requested direction, sentence-level n-gram overlap with the
//! human reference, embedding cosine similarity with the reference, a judge
//! model's 0 to 100 grade, and a token-NLL appropriateness score. Results
//! are stored uniformly as [`MetricRecord`]s; a record may be unscored
//! (`value: None`) or carry a degenerate flag, and both are excluded from
//! aggregate means and coverage counts.

pub mod bleu;
pub mod judge;
pub mod nll;

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SampleId;
use crate::fmath;
use crate::style::{StyleDirection, StyleTask};

/// The metric identifiers used in stores and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    AccLabelMatch,
    Bleu,
    EmbedSim,
    Judge,
    NllScore,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::AccLabelMatch,
        Metric::Bleu,
        Metric::EmbedSim,
        Metric::Judge,
        Metric::NllScore,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::AccLabelMatch => "acc_label_match",
            Metric::Bleu => "bleu",
            Metric::EmbedSim => "embed_sim",
            Metric::Judge => "judge",
            Metric::NllScore => "nll_score",
        }
    }
}

impl core::fmt::Display for Metric {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Metric {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| MetricsError::UnknownMetric(s.to_owned()))
    }
}

/// Detail key marking values that must not enter means or coverage.
pub const DETAIL_DEGENERATE: &str = "degenerate";

/// One metric result for one (sample, model, style) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub sample_id: SampleId,
    pub model_id: String,
    pub style: StyleTask,
    pub metric: Metric,
    /// `None` means the metric could not be computed for this response.
    pub value: Option<f64>,
    /// Free-form diagnostics: parse attempt counts, clamp and degeneracy
    /// flags, unscored reasons. Empty for the common clean case.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub detail: BTreeMap<String, serde_json::Value>,
}

impl MetricRecord {
    pub fn scored(
        sample_id: SampleId,
        model_id: impl Into<String>,
        style: StyleTask,
        metric: Metric,
        value: f64,
    ) -> Self {
        MetricRecord {
            sample_id,
            model_id: model_id.into(),
            style,
            metric,
            value: Some(value),
            detail: BTreeMap::new(),
        }
    }

    pub fn unscored(
        sample_id: SampleId,
        model_id: impl Into<String>,
        style: StyleTask,
        metric: Metric,
        reason: &str,
    ) -> Self {
        let mut detail = BTreeMap::new();
        detail.insert(
            "unscored_reason".to_owned(),
            serde_json::Value::String(reason.to_owned()),
        );
        MetricRecord {
            sample_id,
            model_id: model_id.into(),
            style,
            metric,
            value: None,
            detail,
        }
    }

    pub fn with_detail(mut self, key: &str, value: serde_json::Value) -> Self {
        self.detail.insert(key.to_owned(), value);
        self
    }

    pub fn with_flag(self, key: &str) -> Self {
        self.with_detail(key, serde_json::Value::Bool(true))
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(
            self.detail.get(DETAIL_DEGENERATE),
            Some(serde_json::Value::Bool(true))
        )
    }

    /// Whether this record contributes to means and coverage.
    pub fn is_scored(&self) -> bool {
        self.value.is_some() && !self.is_degenerate()
    }

    /// Canonical store order: (sample, model, metric), then style for
    /// stability across the four directions.
    pub fn sort_key(&self) -> (SampleId, String, Metric, StyleTask) {
        (
            self.sample_id.clone(),
            self.model_id.clone(),
            self.metric,
            self.style,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("no label pairs to score")]
    EmptyLabelSet,
    #[error("label pairs mix styles from different tasks")]
    MixedTasks,
    #[error("embedding dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("embedding has zero magnitude")]
    ZeroVector,
    #[error("embedding contains a non-finite component")]
    NonFiniteComponent,
    #[error("reference tokenizes to nothing")]
    EmptyReference,
    #[error("response is empty")]
    EmptyResponse,
    #[error("no tokens fall inside the response span")]
    NoResponseTokens,
    #[error("token partition is invalid: {0}")]
    BadPartition(#[from] crate::logprob::TokenContractError),
}

/// Fraction of predicted labels matching the requested direction, as a
/// percentage. All labels must come from a single task's direction set.
pub fn style_accuracy(
    pairs: &[(StyleDirection, StyleDirection)],
) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyLabelSet);
    }
    let category = pairs[0].1.category();
    if pairs
        .iter()
        .any(|(p, t)| p.category() != category || t.category() != category)
    {
        return Err(MetricsError::MixedTasks);
    }
    let matches = pairs.iter().filter(|(p, t)| p == t).count();
    Ok(100.0 * matches as f64 / pairs.len() as f64)
}

/// Cosine similarity between two embeddings, scaled to [-100, 100].
pub fn embedding_similarity(left: &[f64], right: &[f64]) -> Result<f64, MetricsError> {
    if left.len() != right.len() {
        return Err(MetricsError::DimensionMismatch {
            left: left.len(),
            right: right.len(),
        });
    }
    if left.is_empty() {
        return Err(MetricsError::ZeroVector);
    }
    if left.iter().chain(right).any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFiniteComponent);
    }
    let mut dot = 0.0;
    let mut norm_left = 0.0;
    let mut norm_right = 0.0;
    for (a, b) in left.iter().zip(right) {
        dot += a * b;
        norm_left += a * a;
        norm_right += b * b;
    }
    if norm_left == 0.0 || norm_right == 0.0 {
        return Err(MetricsError::ZeroVector);
    }
    let cosine = dot / (fmath::sqrt(norm_left) * fmath::sqrt(norm_right));
    Ok((100.0 * cosine).clamp(-100.0, 100.0))
}

/// Sorts records into the canonical store order.
pub fn sort_records(records: &mut [MetricRecord]) {
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// Scored / total counts per metric, for coverage summaries.
pub fn coverage_by_metric(records: &[MetricRecord]) -> BTreeMap<Metric, (usize, usize)> {
    let mut out: BTreeMap<Metric, (usize, usize)> = BTreeMap::new();
    for record in records {
        let entry = out.entry(record.metric).or_insert((0, 0));
        entry.1 += 1;
        if record.is_scored() {
            entry.0 += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    use StyleDirection::{Formal, Informal, Negative, Positive};

    fn sid(n: usize) -> SampleId {
        SampleId::new(alloc::format!("dd-{n:06}-deadbeef"))
    }

    #[test]
    fn accuracy_counts_matches() {
        // 7 matches out of 10
        let pairs = vec![
            (Formal, Formal),
            (Formal, Formal),
            (Informal, Formal),
            (Formal, Formal),
            (Informal, Informal),
            (Formal, Informal),
            (Informal, Informal),
            (Formal, Formal),
            (Informal, Formal),
            (Informal, Informal),
        ];
        assert_abs_diff_eq!(style_accuracy(&pairs).unwrap(), 70.0, epsilon = 1e-12);
    }

    #[test]
    fn accuracy_bounds_hold() {
        assert_eq!(style_accuracy(&[(Positive, Positive)]).unwrap(), 100.0);
        assert_eq!(style_accuracy(&[(Negative, Positive)]).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_rejects_mixed_tasks_and_empty_input() {
        assert_eq!(
            style_accuracy(&[(Formal, Positive)]).unwrap_err(),
            MetricsError::MixedTasks
        );
        assert_eq!(
            style_accuracy(&[(Formal, Formal), (Positive, Positive)]).unwrap_err(),
            MetricsError::MixedTasks
        );
        assert_eq!(style_accuracy(&[]).unwrap_err(), MetricsError::EmptyLabelSet);
    }

    #[test]
    fn cosine_matches_hand_computation() {
        // dot = 8, norms = 3 and 3, cosine = 8/9
        let left = [1.0, 2.0, 2.0];
        let right = [2.0, 1.0, 2.0];
        assert_abs_diff_eq!(
            embedding_similarity(&left, &right).unwrap(),
            100.0 * 8.0 / 9.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn cosine_is_order_invariant_and_bounded() {
        let left = [0.3, -1.2, 4.5, 0.0];
        let right = [-2.0, 0.7, 1.1, 3.3];
        let a = embedding_similarity(&left, &right).unwrap();
        let b = embedding_similarity(&right, &left).unwrap();
        assert_eq!(a, b);
        assert!((-100.0..=100.0).contains(&a));
        assert_abs_diff_eq!(
            embedding_similarity(&left, &left).unwrap(),
            100.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn cosine_rejects_bad_vectors() {
        assert_eq!(
            embedding_similarity(&[1.0], &[1.0, 2.0]).unwrap_err(),
            MetricsError::DimensionMismatch { left: 1, right: 2 }
        );
        assert_eq!(
            embedding_similarity(&[0.0, 0.0], &[1.0, 2.0]).unwrap_err(),
            MetricsError::ZeroVector
        );
        assert_eq!(
            embedding_similarity(&[f64::NAN, 1.0], &[1.0, 2.0]).unwrap_err(),
            MetricsError::NonFiniteComponent
        );
        assert_eq!(
            embedding_similarity(&[], &[]).unwrap_err(),
            MetricsError::ZeroVector
        );
    }

    #[test]
    fn degenerate_records_do_not_count_as_scored() {
        let task = StyleTask::from_direction(Formal);
        let clean = MetricRecord::scored(sid(0), "m", task, Metric::Bleu, 12.5);
        assert!(clean.is_scored());
        let degenerate = MetricRecord::scored(sid(1), "m", task, Metric::NllScore, 1e8)
            .with_flag(DETAIL_DEGENERATE);
        assert!(!degenerate.is_scored());
        let unscored = MetricRecord::unscored(sid(2), "m", task, Metric::Judge, "judge_parse");
        assert!(!unscored.is_scored());
    }

    #[test]
    fn record_round_trips_through_json() {
        let task = StyleTask::from_direction(Negative);
        let record = MetricRecord::scored(sid(3), "model-b", task, Metric::Judge, 85.0)
            .with_detail("parse_attempts", serde_json::json!(1));
        let json = serde_json::to_string(&record).unwrap();
        let back: MetricRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, record);
    }

    #[test]
    fn unscored_value_serializes_as_null() {
        let task = StyleTask::from_direction(Informal);
        let record = MetricRecord::unscored(sid(4), "m", task, Metric::NllScore, "empty_response");
        let json = serde_json::to_string(&record).unwrap();
        assert!(json.contains("\"value\":null"));
    }

    #[test]
    fn sort_is_by_sample_model_metric() {
        let t = StyleTask::from_direction(Formal);
        let mut records = vec![
            MetricRecord::scored(sid(1), "b", t, Metric::Bleu, 1.0),
            MetricRecord::scored(sid(0), "b", t, Metric::NllScore, 1.0),
            MetricRecord::scored(sid(0), "a", t, Metric::NllScore, 1.0),
            MetricRecord::scored(sid(0), "a", t, Metric::AccLabelMatch, 1.0),
        ];
        sort_records(&mut records);
        let order: Vec<(String, Metric)> = records
            .iter()
            .map(|r| (r.model_id.clone(), r.metric))
            .collect();
        assert_eq!(
            order,
            vec![
                ("a".to_owned(), Metric::AccLabelMatch),
                ("a".to_owned(), Metric::NllScore),
                ("b".to_owned(), Metric::NllScore),
                ("b".to_owned(), Metric::Bleu),
            ]
        );
    }

    #[test]
    fn coverage_counts_scored_and_total() {
        let t = StyleTask::from_direction(Formal);
        let records = vec![
            MetricRecord::scored(sid(0), "a", t, Metric::Judge, 50.0),
            MetricRecord::unscored(sid(1), "a", t, Metric::Judge, "judge_parse"),
            MetricRecord::scored(sid(0), "a", t, Metric::Bleu, 3.0),
        ];
        let coverage = coverage_by_metric(&records);
        assert_eq!(coverage[&Metric::Judge], (1, 2));
        assert_eq!(coverage[&Metric::Bleu], (1, 1));
    }
}
