//! Model-quality and labeling-cost metrics, plus the Student-t interval used
//! to aggregate them across rounds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::datagen::{DataPool, InstanceId, Label};
use crate::error::{Error, Result};
use crate::special::student_t_quantile;

/// Relative cost of labeling one positive instance; one negative costs 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub c: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self { c: 1.0 }
    }
}

impl CostModel {
    pub fn new(c: f64) -> Result<Self> {
        if !(c >= 1.0 && c.is_finite()) {
            return Err(Error::Config(format!("positive-label cost C must be >= 1, got {c}")));
        }
        Ok(Self { c })
    }
}

/// Which test-pool measure plays the role of performance λ in the cost
/// efficiency ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerformanceMeasure {
    /// Mean AUC across the test pools.
    #[default]
    Auc,
    /// Mean F1 across the test pools.
    F1,
    /// Average of mean AUC and mean F1.
    AucF1Mean,
}

impl PerformanceMeasure {
    pub fn combine(self, mean_auc: f64, mean_f1: f64) -> f64 {
        match self {
            PerformanceMeasure::Auc => mean_auc,
            PerformanceMeasure::F1 => mean_f1,
            PerformanceMeasure::AucF1Mean => 0.5 * (mean_auc + mean_f1),
        }
    }
}

/// Metrics recorded after one refit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub lambda: f64,
    pub zeta: f64,
    /// `None` when ζ = 0 and the efficiency is undefined.
    pub eta: Option<f64>,
    pub auc_per_test: Vec<f64>,
    pub f1_per_test: Vec<f64>,
}

impl MetricSample {
    pub fn mean_auc(&self) -> f64 {
        mean(&self.auc_per_test)
    }

    pub fn mean_f1(&self) -> f64 {
        mean(&self.f1_per_test)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Area under the ROC curve via the Mann–Whitney rank statistic, with tied
/// scores given their average rank.
pub fn auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::UndefinedMetric(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AUC needs both classes present".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::UndefinedMetric("AUC scores contain NaN".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut pos_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Ranks start..end (0-based) share the average 1-based rank.
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        let pos_in_group = order[start..end].iter().filter(|&&i| labels[i].is_positive()).count();
        pos_rank_sum += avg_rank * pos_in_group as f64;
        start = end;
    }

    let (p, n) = (n_pos as f64, n_neg as f64);
    let u = pos_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * n))
}

/// F1 score of `prob >= threshold` predictions; 0 when precision and
/// recall are both zero.
pub fn f1(probs: &[f64], labels: &[Label], threshold: f64) -> Result<f64> {
    if probs.len() != labels.len() {
        return Err(Error::UndefinedMetric(format!(
            "{} probabilities but {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&p, &l) in probs.iter().zip(labels) {
        match (p >= threshold, l.is_positive()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    // 2PR/(P+R) simplifies to 2TP/(2TP+FP+FN).
    let denom = 2 * tp + fp + fneg;
    if tp == 0 || denom == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * tp as f64 / denom as f64)
}

/// ζ: fraction of positive labels in the labeled pool.
pub fn positive_ratio(labeled: &DataPool) -> Result<f64> {
    if labeled.is_empty() {
        return Err(Error::UndefinedMetric("positive ratio of an empty pool".into()));
    }
    Ok(labeled.positives() as f64 / labeled.len() as f64)
}

/// η = λ / (ζ C).
///
/// Evaluated as `(λ / ζ) / C` so that changing C rescales η exactly.
pub fn cost_efficiency(lambda: f64, zeta: f64, cost: &CostModel) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!("performance must lie in [0, 1], got {lambda}")));
    }
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::Domain(format!("positive ratio must lie in [0, 1], got {zeta}")));
    }
    if cost.c < 1.0 {
        return Err(Error::Domain(format!("cost C must be >= 1, got {}", cost.c)));
    }
    if zeta == 0.0 {
        return Err(Error::UndefinedEfficiency);
    }
    Ok((lambda / zeta) / cost.c)
}

/// φ: final-model probabilities of every instance whose interim probability
/// lies in `[0.5 - delta, 0.5 + delta]`, in ascending id order.
pub fn compute_phi(
    final_probs: &BTreeMap<InstanceId, f64>,
    interim_probs: &BTreeMap<InstanceId, f64>,
    delta: f64,
) -> Result<Vec<f64>> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Diagnostic(format!("delta must lie in (0, 0.5), got {delta}")));
    }
    if final_probs.len() != interim_probs.len() || !final_probs.keys().eq(interim_probs.keys()) {
        return Err(Error::Diagnostic(
            "final and interim probabilities cover different instances".into(),
        ));
    }
    let (lo, hi) = (0.5 - delta, 0.5 + delta);
    Ok(interim_probs
        .iter()
        .zip(final_probs.values())
        .filter(|((_, &p), _)| p >= lo && p <= hi)
        .map(|(_, &f)| f)
        .collect())
}

/// Mean with a symmetric Student-t confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiSummary {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub half_width: f64,
    pub confidence: f64,
    pub n: usize,
}

impl CiSummary {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

pub const DEFAULT_CONFIDENCE: f64 = 0.99;

/// `mean ± t(n-1, (1+confidence)/2) · sd / √n`.
pub fn mean_ci(samples: &[f64], confidence: f64) -> Result<CiSummary> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "a confidence interval needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Domain(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("samples must be finite".into()));
    }
    let n = samples.len();
    let nf = n as f64;
    // Shift by the first sample: exact for constant inputs and better
    // conditioned for the variance.
    let shift = samples[0];
    let mean_offset = samples.iter().map(|x| x - shift).sum::<f64>() / nf;
    let mean = shift + mean_offset;
    let ss: f64 = samples.iter().map(|x| (x - shift - mean_offset).powi(2)).sum();
    let sd = (ss / (nf - 1.0)).sqrt();
    let t = student_t_quantile(0.5 * (1.0 + confidence), nf - 1.0);
    let half_width = t * sd / nf.sqrt();
    Ok(CiSummary {
        mean,
        lower: mean - half_width,
        upper: mean + half_width,
        half_width,
        confidence,
        n,
    })
}
