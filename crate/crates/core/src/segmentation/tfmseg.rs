//! Multiple change point detection over seeded intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::intervals::{SeededInterval, SeededIntervalSet};
use crate::segmentation::threshold::ThresholdCoefficients;
use crate::stats::PseudoFactorStats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// `π`; intervals whose maximal detector does not exceed it are dropped.
    pub threshold: f64,
    /// Diagonal of `W`, one entry per coordinate of `V̂_t`.
    pub weight: Vec<f64>,
    /// `ϖ`.
    pub trim: usize,
    /// Coefficients `π` was computed from, if any.
    pub coefficients: Option<ThresholdCoefficients>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointEstimate {
    pub location: usize,
    pub detector: f64,
    pub interval: SeededInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointReport {
    /// Sorted by location.
    pub estimates: Vec<ChangePointEstimate>,
    pub threshold: f64,
    pub trim: usize,
    /// Intervals whose maximal detector exceeded the threshold.
    pub candidates: usize,
}

impl ChangePointReport {
    pub fn locations(&self) -> Vec<usize> {
        self.estimates.iter().map(|e| e.location).collect()
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }
}

/// Maximises the detector over integer `τ` with `lo ≤ τ ≤ hi` inside `(a, b]`.
/// Ties go to the smallest `τ`. `None` when the range is empty.
pub fn scan_range(
    stats: &PseudoFactorStats,
    inv_weight: &[f64],
    a: usize,
    b: usize,
    lo: usize,
    hi: usize,
) -> Option<(usize, f64)> {
    let lo = lo.max(a + 1);
    let hi = hi.min(b.saturating_sub(1));
    if lo > hi {
        return None;
    }
    let n = (b - a) as f64;
    let (pa, pb) = (stats.prefix(a), stats.prefix(b));
    let mut best: Option<(usize, f64)> = None;
    for tau in lo..=hi {
        let pt = stats.prefix(tau);
        let (left, right) = ((tau - a) as f64, (b - tau) as f64);
        let scale2 = left * right / n;
        let mut q = 0.0;
        for i in 0..inv_weight.len() {
            let diff = (pb[i] - pt[i]) / right - (pt[i] - pa[i]) / left;
            q += diff * diff * inv_weight[i];
        }
        let value = (scale2 * q).sqrt();
        if best.is_none_or(|(_, v)| value > v) {
            best = Some((tau, value));
        }
    }
    best
}

/// Trimmed scan `a + ϖ < τ < b − ϖ`. Intervals with `b − a ≤ 2ϖ` give `None`.
pub fn scan_interval(
    stats: &PseudoFactorStats,
    inv_weight: &[f64],
    interval: &SeededInterval,
    trim: usize,
) -> Option<(usize, f64)> {
    if interval.len() <= 2 * trim {
        return None;
    }
    scan_range(
        stats,
        inv_weight,
        interval.start,
        interval.end,
        interval.start + trim + 1,
        interval.end - trim - 1,
    )
}

fn check_weight(stats: &PseudoFactorStats, weight: &[f64]) -> Result<Vec<f64>> {
    if weight.len() != stats.dim() {
        return Err(Error::DimensionMismatch(format!(
            "weight has {} entries, statistics have dimension {}",
            weight.len(),
            stats.dim()
        )));
    }
    if let Some(w) = weight.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidConfig(format!("weight entry {w} is not positive")));
    }
    Ok(weight.iter().map(|w| 1.0 / w).collect())
}

/// Largest detector value `max_ℓ max_{a_ℓ + ϖ < τ < b_ℓ − ϖ}` over
/// `intervals`; `trim = 0` scans every interior split.
pub fn max_detector(
    stats: &PseudoFactorStats,
    weight: &[f64],
    intervals: &[SeededInterval],
    trim: usize,
) -> Result<f64> {
    let inv = check_weight(stats, weight)?;
    let mut best = 0.0f64;
    for iv in intervals {
        if iv.end > stats.len() {
            return Err(Error::EmptyInterval {
                start: iv.start,
                end: iv.end,
            });
        }
        if let Some((_, v)) = scan_interval(stats, &inv, iv, trim) {
            best = best.max(v);
        }
    }
    Ok(best)
}

/// Scans every seeded interval, keeps those whose maximal detector exceeds
/// `π`, then repeatedly accepts the maximiser of the shortest remaining
/// interval (ties: larger detector, then smaller start) and discards every
/// interval containing it.
pub fn tfmseg(
    stats: &PseudoFactorStats,
    intervals: &SeededIntervalSet,
    params: &DetectorParams,
) -> Result<ChangePointReport> {
    if intervals.len != stats.len() {
        return Err(Error::DimensionMismatch(format!(
            "intervals built for T = {}, statistics have T = {}",
            intervals.len,
            stats.len()
        )));
    }
    let inv = check_weight(stats, &params.weight)?;
    let mut candidates: Vec<ChangePointEstimate> = intervals
        .intervals
        .iter()
        .filter_map(|iv| {
            scan_interval(stats, &inv, iv, params.trim).map(|(tau, v)| ChangePointEstimate {
                location: tau,
                detector: v,
                interval: *iv,
            })
        })
        .filter(|c| c.detector > params.threshold)
        .collect();
    let surviving = candidates.len();
    candidates.sort_by(|x, y| {
        x.interval
            .len()
            .cmp(&y.interval.len())
            .then(y.detector.total_cmp(&x.detector))
            .then(x.interval.start.cmp(&y.interval.start))
    });
    let mut estimates = Vec::new();
    while !candidates.is_empty() {
        let chosen = candidates.remove(0);
        let theta = chosen.location;
        candidates.retain(|c| !c.interval.contains(theta));
        estimates.push(chosen);
    }
    estimates.sort_by_key(|e| e.location);
    Ok(ChangePointReport {
        estimates,
        threshold: params.threshold,
        trim: params.trim,
        candidates: surviving,
    })
}
