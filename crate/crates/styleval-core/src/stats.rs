//! Correlation statistics for validating metrics against human judgments.
//!
//! Human annotations and metric values are arranged per sample as vectors
//! across the candidate models. The correlation between the two vectors is
//! computed per sample and averaged over samples, so a metric is rewarded
//! for ranking models correctly on each individual input rather than for
//! tracking coarse corpus-level differences.
//!
//! Pearson handles linear agreement, Kendall handles rank agreement with
//! full tie correction (the tau-b variant). Degenerate vectors (constant on
//! either side, or fewer than two paired cells) yield no value for that
//! sample; they are counted and skipped, never folded in as zero or NaN.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SampleId;
use crate::fmath;
use crate::metrics::Metric;
use crate::style::StyleTask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    Pearson,
    KendallTau,
}

impl CorrelationKind {
    pub const ALL: [CorrelationKind; 2] = [CorrelationKind::Pearson, CorrelationKind::KendallTau];

    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationKind::Pearson => "pearson",
            CorrelationKind::KendallTau => "kendall_tau",
        }
    }
}

impl core::fmt::Display for CorrelationKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("vectors have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 points, got {found}")]
    TooFewPoints { found: usize },
    #[error("input contains a non-finite value")]
    NonFinite,
    #[error("matrix cell ({sample}, {model}) is out of bounds")]
    CellOutOfBounds { sample: usize, model: usize },
    #[error("need at least 2 models per sample, got {found}")]
    TooFewModels { found: usize },
}

fn validate_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(StatsError::TooFewPoints { found: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Pearson linear correlation. `Ok(None)` marks a degenerate input: either
/// vector constant, where the coefficient is undefined.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>, StatsError> {
    validate_pair(x, y)?;
    if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
        return Ok(None);
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / fmath::sqrt(sxx * syy)).clamp(-1.0, 1.0)))
}

/// Merge sort that counts strict inversions, the discordant-pair count once
/// the data is pre-sorted by the other axis.
fn sort_counting_inversions(values: &mut [f64]) -> u64 {
    let n = values.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let mut left = values[..mid].to_vec();
    let mut right = values[mid..].to_vec();
    let mut inversions = sort_counting_inversions(&mut left) + sort_counting_inversions(&mut right);
    let (mut i, mut j) = (0, 0);
    for slot in values.iter_mut() {
        if i < left.len() && (j >= right.len() || left[i] <= right[j]) {
            *slot = left[i];
            i += 1;
        } else {
            inversions += (left.len() - i) as u64;
            *slot = right[j];
            j += 1;
        }
    }
    inversions
}

fn tied_pairs<F: Fn(usize, usize) -> bool>(len: usize, same: F) -> u64 {
    let mut total = 0u64;
    let mut run_start = 0;
    for i in 1..=len {
        if i == len || !same(i - 1, i) {
            let run = (i - run_start) as u64;
            total += run * (run - 1) / 2;
            run_start = i;
        }
    }
    total
}

/// Kendall rank correlation with tie correction (tau-b). Sorting plus a
/// merge-based inversion count keeps it O(n log n). `Ok(None)` marks a
/// degenerate input where one side is entirely tied.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<Option<f64>, StatsError> {
    validate_pair(x, y)?;
    let n = x.len();
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let tied_x = tied_pairs(n, |a, b| pairs[a].0 == pairs[b].0);
    let tied_both = tied_pairs(n, |a, b| pairs[a].0 == pairs[b].0 && pairs[a].1 == pairs[b].1);
    if n0 == tied_x {
        return Ok(None);
    }

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let discordant = sort_counting_inversions(&mut ys);
    let tied_y = tied_pairs(n, |a, b| ys[a] == ys[b]);
    if n0 == tied_y {
        return Ok(None);
    }

    let concordant_minus_discordant =
        n0 as i128 - tied_x as i128 - tied_y as i128 + tied_both as i128 - 2 * discordant as i128;
    let denominator = fmath::sqrt((n0 - tied_x) as f64 * (n0 - tied_y) as f64);
    Ok(Some(
        (concordant_minus_discordant as f64 / denominator).clamp(-1.0, 1.0),
    ))
}

pub fn correlation(kind: CorrelationKind, x: &[f64], y: &[f64]) -> Result<Option<f64>, StatsError> {
    match kind {
        CorrelationKind::Pearson => pearson(x, y),
        CorrelationKind::KendallTau => kendall_tau_b(x, y),
    }
}

/// Human evaluation dimensions. Style strength validates the label-match
/// metric; appropriateness validates everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Appropriateness,
    StyleStrength,
}

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Appropriateness => "appropriateness",
            Dimension::StyleStrength => "style_strength",
        }
    }
}

impl core::fmt::Display for Dimension {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which human dimension a metric is validated against.
pub fn metric_dimension(metric: Metric) -> Dimension {
    match metric {
        Metric::AccLabelMatch => Dimension::StyleStrength,
        Metric::Bleu | Metric::EmbedSim | Metric::Judge | Metric::NllScore => {
            Dimension::Appropriateness
        }
    }
}

/// One human rating of one response on one dimension, 0 to 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanAnnotation {
    pub sample_id: SampleId,
    pub model_id: String,
    pub style: StyleTask,
    pub dimension: Dimension,
    pub score: f64,
    pub annotator_id: String,
}

/// A samples-by-models grid holding human means on one side and metric
/// values on the other. Cells may be absent on either side; only cells
/// present on both participate in correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    sample_ids: Vec<SampleId>,
    model_ids: Vec<String>,
    human: Vec<Option<f64>>,
    metric: Vec<Option<f64>>,
}

impl ScoreMatrix {
    pub fn new(sample_ids: Vec<SampleId>, model_ids: Vec<String>) -> Self {
        let cells = sample_ids.len() * model_ids.len();
        ScoreMatrix {
            sample_ids,
            model_ids,
            human: alloc::vec![None; cells],
            metric: alloc::vec![None; cells],
        }
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_models(&self) -> usize {
        self.model_ids.len()
    }

    pub fn sample_ids(&self) -> &[SampleId] {
        &self.sample_ids
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    fn cell(&self, sample: usize, model: usize) -> Result<usize, StatsError> {
        if sample >= self.n_samples() || model >= self.n_models() {
            return Err(StatsError::CellOutOfBounds { sample, model });
        }
        Ok(sample * self.n_models() + model)
    }

    pub fn set_human(&mut self, sample: usize, model: usize, value: f64) -> Result<(), StatsError> {
        if !value.is_finite() {
            return Err(StatsError::NonFinite);
        }
        let idx = self.cell(sample, model)?;
        self.human[idx] = Some(value);
        Ok(())
    }

    pub fn set_metric(
        &mut self,
        sample: usize,
        model: usize,
        value: f64,
    ) -> Result<(), StatsError> {
        if !value.is_finite() {
            return Err(StatsError::NonFinite);
        }
        let idx = self.cell(sample, model)?;
        self.metric[idx] = Some(value);
        Ok(())
    }

    /// The (human, metric) pairs for one sample, restricted to cells present
    /// on both sides, in model order.
    pub fn paired_row(&self, sample: usize) -> (Vec<f64>, Vec<f64>) {
        let m = self.n_models();
        let mut human = Vec::new();
        let mut metric = Vec::new();
        for model in 0..m {
            let idx = sample * m + model;
            if let (Some(h), Some(v)) = (self.human[idx], self.metric[idx]) {
                human.push(h);
                metric.push(v);
            }
        }
        (human, metric)
    }
}

/// Averages annotator scores and arranges them against metric values for one
/// (style, metric) slice. Rows are the annotated samples, columns the
/// annotated models, both in sorted order for determinism.
pub fn build_score_matrix(
    annotations: &[HumanAnnotation],
    records: &[crate::metrics::MetricRecord],
    style: StyleTask,
    metric: Metric,
) -> ScoreMatrix {
    let dimension = metric_dimension(metric);
    let relevant: Vec<&HumanAnnotation> = annotations
        .iter()
        .filter(|a| a.style == style && a.dimension == dimension)
        .collect();

    let mut sample_ids: Vec<SampleId> = relevant.iter().map(|a| a.sample_id.clone()).collect();
    sample_ids.sort();
    sample_ids.dedup();
    let mut model_ids: Vec<String> = relevant.iter().map(|a| a.model_id.clone()).collect();
    model_ids.sort();
    model_ids.dedup();

    let mut matrix = ScoreMatrix::new(sample_ids, model_ids);

    // human side: mean over annotators per cell
    let mut sums: alloc::collections::BTreeMap<(usize, usize), (f64, usize)> =
        alloc::collections::BTreeMap::new();
    for annotation in &relevant {
        let sample = matrix
            .sample_ids
            .binary_search(&annotation.sample_id)
            .expect("sample id came from this list");
        let model = matrix
            .model_ids
            .binary_search(&annotation.model_id)
            .expect("model id came from this list");
        let entry = sums.entry((sample, model)).or_insert((0.0, 0));
        entry.0 += annotation.score;
        entry.1 += 1;
    }
    for ((sample, model), (sum, count)) in sums {
        let _ = matrix.set_human(sample, model, sum / count as f64);
    }

    // metric side: scored records only
    for record in records {
        if record.style != style || record.metric != metric || !record.is_scored() {
            continue;
        }
        let Ok(sample) = matrix.sample_ids.binary_search(&record.sample_id) else {
            continue;
        };
        let Ok(model) = matrix.model_ids.binary_search(&record.model_id) else {
            continue;
        };
        let value = record.value.expect("scored record has a value");
        let _ = matrix.set_metric(sample, model, value);
    }
    matrix
}

/// Per-sample correlations across models, plus their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCorrelation {
    /// One entry per matrix row; `None` where the row was degenerate.
    pub per_sample: Vec<Option<f64>>,
    /// Mean over the defined entries; `None` if every row was degenerate.
    pub mean: Option<f64>,
    pub samples_used: usize,
    pub samples_skipped: usize,
}

/// Correlates human and metric vectors sample by sample and averages the
/// per-sample coefficients. Rows with fewer than two paired cells or with a
/// constant vector on either side are skipped and counted.
pub fn sample_level_corr(
    matrix: &ScoreMatrix,
    kind: CorrelationKind,
) -> Result<SampleCorrelation, StatsError> {
    if matrix.n_models() < 2 {
        return Err(StatsError::TooFewModels {
            found: matrix.n_models(),
        });
    }
    let mut per_sample = Vec::with_capacity(matrix.n_samples());
    for sample in 0..matrix.n_samples() {
        let (human, metric) = matrix.paired_row(sample);
        if human.len() < 2 {
            per_sample.push(None);
            continue;
        }
        per_sample.push(correlation(kind, &human, &metric)?);
    }
    Ok(summarize(per_sample))
}

fn summarize(per_sample: Vec<Option<f64>>) -> SampleCorrelation {
    let defined: Vec<f64> = per_sample.iter().filter_map(|v| *v).collect();
    let mean = if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    };
    SampleCorrelation {
        samples_used: defined.len(),
        samples_skipped: per_sample.len() - defined.len(),
        per_sample,
        mean,
    }
}

/// Pools several per-sample correlation sets into one, for an overall row
/// spanning every direction of a task pair.
pub fn pool_sample_correlations(parts: &[&SampleCorrelation]) -> SampleCorrelation {
    let mut per_sample = Vec::new();
    for part in parts {
        per_sample.extend(part.per_sample.iter().copied());
    }
    summarize(per_sample)
}
