//! Analytic variance bounds, image-count equivalence, detection rates and
//! the extraction benchmark.

mod bench;

use std::io::Write;

use crate::correlate::CorrelateError;
use crate::denoise::DenoiseError;
use crate::fingerprint::FingerprintError;
use crate::media_io::MediaError;

pub use bench::{run_bench, BenchConfig, BenchCorpus, BenchOptions, BenchReport, BenchRow, Query};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("denominator must be positive")]
    ZeroDenominator,
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("no positive-labelled items")]
    NoPositives,
    #[error("scores contain only one label")]
    SingleClass,
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
    #[error(transparent)]
    Correlate(#[from] CorrelateError),
    #[error(transparent)]
    Denoise(#[from] DenoiseError),
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Variances of the sensor noise before filtering (`sigma1_sq`) and of the
/// scene content leaking through the filter (`sigma2_sq`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBudget {
    sigma1_sq: f64,
    sigma2_sq: f64,
}

impl NoiseBudget {
    pub fn new(sigma1_sq: f64, sigma2_sq: f64) -> Result<Self, AnalysisError> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !ok(sigma1_sq) || !ok(sigma2_sq) || sigma1_sq + sigma2_sq == 0.0 {
            return Err(AnalysisError::BadParameter(format!(
                "noise budget ({sigma1_sq}, {sigma2_sq}) must be non-negative and not both zero"
            )));
        }
        Ok(Self {
            sigma1_sq,
            sigma2_sq,
        })
    }

    pub fn sigma1_sq(&self) -> f64 {
        self.sigma1_sq
    }

    pub fn sigma2_sq(&self) -> f64 {
        self.sigma2_sq
    }
}

/// Lower bound on the per-pixel variance of the conventional estimate.
pub fn variance_bound_conventional(budget: NoiseBudget, sum_i2: f64) -> Result<f64, AnalysisError> {
    if sum_i2.is_nan() || sum_i2 <= 0.0 {
        return Err(AnalysisError::ZeroDenominator);
    }
    Ok((budget.sigma1_sq + budget.sigma2_sq) / sum_i2)
}

/// Lower bound for an estimate built from depth-`d` averaged frames; averaging
/// divides the sensor-noise term by `d` but leaves the content term alone.
pub fn variance_bound_sda(
    budget: NoiseBudget,
    depth: usize,
    sum_i2_sda: f64,
) -> Result<f64, AnalysisError> {
    if depth == 0 {
        return Err(AnalysisError::BadParameter(
            "depth must be at least 1".into(),
        ));
    }
    if sum_i2_sda.is_nan() || sum_i2_sda <= 0.0 {
        return Err(AnalysisError::ZeroDenominator);
    }
    Ok((budget.sigma1_sq / depth as f64 + budget.sigma2_sq) / sum_i2_sda)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceBound {
    pub n: u64,
    pub d: usize,
    pub m_max: f64,
}

impl EquivalenceBound {
    /// Frames to plan for: `m_max` rounded up.
    pub fn frames_needed(&self) -> u64 {
        self.m_max.ceil() as u64
    }
}

/// How many frames depth-`d` averaging may need to match a conventional
/// estimate built from `n` frames: `n (s1 + d s2) / (s1 + s2)`.
pub fn required_images(
    n: u64,
    d: usize,
    budget: NoiseBudget,
) -> Result<EquivalenceBound, AnalysisError> {
    if n == 0 || d == 0 {
        return Err(AnalysisError::BadParameter(format!(
            "n={n} and d={d} must be at least 1"
        )));
    }
    let (s1, s2) = (budget.sigma1_sq, budget.sigma2_sq);
    let m_max = n as f64 * ((s1 + d as f64 * s2) / (s1 + s2));
    Ok(EquivalenceBound { n, d, m_max })
}

/// A decision or score with its ground-truth label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Labeled<T> {
    pub value: T,
    pub positive: bool,
}

impl<T> Labeled<T> {
    pub fn new(value: T, positive: bool) -> Self {
        Self { value, positive }
    }
}

/// Fraction of positive-labelled items that were matched.
pub fn compute_tpr(decisions: &[Labeled<bool>]) -> Result<f64, AnalysisError> {
    rate(decisions, true).ok_or(AnalysisError::NoPositives)
}

/// Fraction of negative-labelled items that were matched, if any exist.
pub fn compute_fpr(decisions: &[Labeled<bool>]) -> Option<f64> {
    rate(decisions, false)
}

fn rate(decisions: &[Labeled<bool>], label: bool) -> Option<f64> {
    let (hits, total) = decisions
        .iter()
        .filter(|d| d.positive == label)
        .fold((0usize, 0usize), |(h, t), d| (h + d.value as usize, t + 1));
    (total > 0).then(|| hits as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// Items scoring at or above this value are called matches.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Area under the curve by the trapezoid rule.
    pub fn auc(&self) -> f64 {
        self.points
            .windows(2)
            .map(|p| (p[1].fpr - p[0].fpr) * (p[1].tpr + p[0].tpr) / 2.0)
            .sum()
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(sink);
        out.write_record(["threshold", "fpr", "tpr"])?;
        for p in &self.points {
            out.write_record([
                format!("{:.4}", p.threshold),
                format!("{:.4}", p.fpr),
                format!("{:.4}", p.tpr),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Sweeps the threshold over every distinct score, from above the maximum
/// (nothing matched) down to the minimum (everything matched).
pub fn compute_roc(scores: &[Labeled<f64>]) -> Result<RocCurve, AnalysisError> {
    if scores.iter().any(|s| s.value.is_nan()) {
        return Err(AnalysisError::BadParameter("NaN score".into()));
    }
    let positives = scores.iter().filter(|s| s.positive).count();
    let negatives = scores.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(AnalysisError::SingleClass);
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.value.total_cmp(&a.value));
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].value;
        while i < sorted.len() && sorted[i].value == t {
            if sorted[i].positive {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: t,
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
        });
    }
    Ok(RocCurve { points })
}
