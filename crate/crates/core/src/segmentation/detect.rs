//! End-to-end detection: ranks, loadings, pseudo-factors, statistics,
//! weight, intervals and the segmentation loop.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{
    estimate_loadings, estimate_pseudo_factors, estimate_ranks, LoadingSet, RankEstimate,
};
use crate::segmentation::cusum::{bartlett_bandwidth, weight_matrix_with_floor, WEIGHT_FLOOR_RELATIVE};
use crate::segmentation::intervals::{default_mu, generate_seeded_intervals, SeededIntervalSet};
use crate::segmentation::threshold::{threshold_pi, ThresholdCoefficients, DEFAULT_COEFFICIENTS};
use crate::segmentation::tfmseg::{tfmseg, ChangePointReport, DetectorParams};
use crate::series::TensorSeries;
use crate::stats::PseudoFactorStats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSpec {
    Coefficients(ThresholdCoefficients),
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectConfig {
    /// Factor numbers; estimated from the full sample when `None`.
    pub ranks: Option<Vec<usize>>,
    pub mu: Option<f64>,
    pub trim: Option<usize>,
    pub threshold: ThresholdSpec,
    pub weight_floor: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            ranks: None,
            mu: None,
            trim: None,
            threshold: ThresholdSpec::Coefficients(DEFAULT_COEFFICIENTS),
            weight_floor: WEIGHT_FLOOR_RELATIVE,
        }
    }
}

/// Everything computed on the way to a [`ChangePointReport`].
#[derive(Debug, Clone)]
pub struct Detection {
    pub ranks: Vec<usize>,
    pub rank_estimate: Option<RankEstimate>,
    pub loadings: LoadingSet,
    pub factors: TensorSeries,
    pub stats: PseudoFactorStats,
    pub intervals: SeededIntervalSet,
    pub bandwidth: usize,
    pub params: DetectorParams,
    pub report: ChangePointReport,
}

pub fn detect(series: &TensorSeries, cfg: &DetectConfig) -> Result<Detection> {
    series.require_complete()?;
    let t = series.len();
    if t < 8 {
        return Err(Error::SeriesTooShort(format!("detection needs T >= 8, got {t}")));
    }
    let (ranks, rank_estimate) = match &cfg.ranks {
        Some(r) => (r.clone(), None),
        None => {
            let est = estimate_ranks(series)?;
            (est.ranks.clone(), Some(est))
        }
    };
    let loadings = estimate_loadings(series, &ranks)?;
    let factors = estimate_pseudo_factors(series, &loadings)?;
    let stats = PseudoFactorStats::new(&factors)?;
    let weight = weight_matrix_with_floor(&stats, cfg.weight_floor)?;
    let mut intervals = generate_seeded_intervals(t, cfg.mu.unwrap_or_else(|| default_mu(t)))?;
    if let Some(trim) = cfg.trim {
        intervals = intervals.with_trim(trim);
    }
    let (threshold, coefficients) = match cfg.threshold {
        ThresholdSpec::Coefficients(c) => (threshold_pi(t, &ranks, &c), Some(c)),
        ThresholdSpec::Fixed(v) if v >= 0.0 && v.is_finite() => (v, None),
        ThresholdSpec::Fixed(v) => {
            return Err(Error::InvalidConfig(format!("threshold {v} is not a nonnegative number")))
        }
    };
    let params = DetectorParams {
        threshold,
        weight,
        trim: intervals.trim,
        coefficients,
    };
    let report = tfmseg(&stats, &intervals, &params)?;
    Ok(Detection {
        ranks,
        rank_estimate,
        loadings,
        factors,
        stats,
        intervals,
        bandwidth: bartlett_bandwidth(t),
        params,
        report,
    })
}
