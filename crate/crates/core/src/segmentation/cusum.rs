//! CUSUM statistics, the weighted detector and the Bartlett weight.

use crate::error::{Error, Result};
use crate::stats::PseudoFactorStats;

/// `M = √((τ−a)(b−τ)/(b−a)) · (mean over (τ, b] − mean over (a, τ])`.
pub fn cusum_into(
    stats: &PseudoFactorStats,
    a: usize,
    tau: usize,
    b: usize,
    out: &mut [f64],
) -> Result<()> {
    if !(a < tau && tau < b) || b > stats.len() {
        return Err(Error::EmptyInterval { start: a, end: b });
    }
    let (left, right) = ((tau - a) as f64, (b - tau) as f64);
    let scale = (left * right / (b - a) as f64).sqrt();
    let (pa, pt, pb) = (stats.prefix(a), stats.prefix(tau), stats.prefix(b));
    for (i, o) in out.iter_mut().enumerate() {
        *o = scale * ((pb[i] - pt[i]) / right - (pt[i] - pa[i]) / left);
    }
    Ok(())
}

pub fn cusum(stats: &PseudoFactorStats, a: usize, tau: usize, b: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; stats.dim()];
    cusum_into(stats, a, tau, b, &mut out)?;
    Ok(out)
}

/// `(Mᵀ W⁻¹ M)^{1/2}` for diagonal `W`.
pub fn detector(m: &[f64], weight: &[f64]) -> f64 {
    m.iter()
        .zip(weight)
        .map(|(v, w)| v * v / w)
        .sum::<f64>()
        .sqrt()
}

/// Largest `w` with `w⁴ ≤ T`, i.e. `⌊T^{1/4}⌋` without rounding error.
pub fn bartlett_bandwidth(t: usize) -> usize {
    let mut w = (t as f64).powf(0.25).floor() as usize;
    while w > 0 && w.pow(4) > t {
        w -= 1;
    }
    while (w + 1).pow(4) <= t {
        w += 1;
    }
    w
}

/// Diagonal of the Bartlett long-run covariance of already centred rows.
///
/// `rows` holds `T` rows of length `d`. Returns
/// `Γ(0) + Σ_{ℓ=1}^{w} (1 − ℓ/(w+1)) · 2Γ(ℓ)` on the diagonal, where
/// `Γ(ℓ)_{ii} = T⁻¹ Σ_{t>ℓ} g_{t,i} g_{t−ℓ,i}`. No floor is applied.
pub fn bartlett_long_run_diag(rows: &[f64], d: usize, bandwidth: usize) -> Vec<f64> {
    let t = if d == 0 { 0 } else { rows.len() / d };
    let inv_t = 1.0 / t as f64;
    let mut out = vec![0.0; d];
    for lag in 0..=bandwidth.min(t.saturating_sub(1)) {
        let kernel = if lag == 0 {
            1.0
        } else {
            2.0 * (1.0 - lag as f64 / (bandwidth + 1) as f64)
        };
        for s in lag..t {
            let cur = &rows[s * d..(s + 1) * d];
            let past = &rows[(s - lag) * d..(s - lag + 1) * d];
            for ((o, x), y) in out.iter_mut().zip(cur).zip(past) {
                *o += kernel * inv_t * x * y;
            }
        }
    }
    out
}

/// Relative floor applied to the weight diagonal.
pub const WEIGHT_FLOOR_RELATIVE: f64 = 1e-10;
/// Floor used when every diagonal entry is zero.
pub const WEIGHT_FLOOR_ABSOLUTE: f64 = 1e-300;

/// Floors every entry at `max(diag) · rel`, or at `1e-300` when the
/// diagonal is identically zero.
pub fn floor_weight(diag: &mut [f64], rel: f64) {
    let top = diag.iter().cloned().fold(0.0f64, f64::max);
    let floor = if top > 0.0 { top * rel } else { WEIGHT_FLOOR_ABSOLUTE };
    for v in diag.iter_mut() {
        if !(*v >= floor) {
            *v = floor;
        }
    }
}

/// Global diagonal weight `W`: the Bartlett long-run variance of `V̂_t`
/// centred at its full-sample mean, bandwidth `⌊T^{1/4}⌋`, floored.
pub fn weight_matrix(stats: &PseudoFactorStats) -> Result<Vec<f64>> {
    weight_matrix_with_floor(stats, WEIGHT_FLOOR_RELATIVE)
}

pub fn weight_matrix_with_floor(stats: &PseudoFactorStats, rel_floor: f64) -> Result<Vec<f64>> {
    let t = stats.len();
    if t < 2 {
        return Err(Error::SeriesTooShort(format!(
            "the weight needs at least 2 observations, got {t}"
        )));
    }
    let d = stats.dim();
    let mean = stats.interval_mean(0, t)?;
    let mut rows = Vec::with_capacity(t * d);
    for s in 0..t {
        rows.extend(stats.v(s).iter().zip(&mean).map(|(v, m)| v - m));
    }
    let mut diag = bartlett_long_run_diag(&rows, d, bartlett_bandwidth(t));
    floor_weight(&mut diag, rel_floor);
    Ok(diag)
}
