//! Attribution of detected changes to tensor modes, and loading
//! re-estimation that pools segments across changes a mode is blind to.

mod informed;

pub use informed::{loading_distance, mode_informed_loadings, ModeInformedLoadings, RunLoading};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::segmentation::intervals::SeededInterval;
use crate::stats::PseudoFactorStats;

pub const DEFAULT_ZETA_MULTIPLIER: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointMode {
    /// Use the finer seeded intervals to keep a margin around each estimate.
    Theoretical,
    /// `θ̂⁻ = θ̂⁺ = θ̂`.
    #[default]
    Practical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjustedEndpoints {
    pub minus: usize,
    pub plus: usize,
    /// No finer interval qualified on that side, so `θ̂` itself was used.
    pub minus_fallback: bool,
    pub plus_fallback: bool,
}

/// `θ̂⁻ = max{a : (a, b] ∈ M*, b ≤ θ̂}` and `θ̂⁺ = min{b : (a, b] ∈ M*, a > θ̂}`
/// in theoretical mode, `θ̂` on both sides in practical mode.
pub fn adjusted_endpoints(
    locations: &[usize],
    finer: &[SeededInterval],
    mode: EndpointMode,
) -> Vec<AdjustedEndpoints> {
    locations
        .iter()
        .map(|&theta| match mode {
            EndpointMode::Practical => AdjustedEndpoints {
                minus: theta,
                plus: theta,
                minus_fallback: false,
                plus_fallback: false,
            },
            EndpointMode::Theoretical => {
                let minus = finer.iter().filter(|iv| iv.end <= theta).map(|iv| iv.start).max();
                let plus = finer.iter().filter(|iv| iv.start > theta).map(|iv| iv.end).min();
                AdjustedEndpoints {
                    minus: minus.unwrap_or(theta),
                    plus: plus.unwrap_or(theta),
                    minus_fallback: minus.is_none(),
                    plus_fallback: plus.is_none(),
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiStatistic {
    /// `Γ̂_next / tr Γ̂_next − Γ̂_prev / tr Γ̂_prev`.
    pub matrix: SymMatrix,
    /// Operator norm of `matrix`.
    pub norm: f64,
}

fn trace_normalized(c: &SymMatrix, start: usize, end: usize) -> Result<SymMatrix> {
    let tr = c.trace();
    if !(tr > 0.0) || !tr.is_finite() {
        return Err(Error::DegenerateSegment {
            start,
            end,
            reason: format!("mode covariance has trace {tr}"),
        });
    }
    Ok(c.scaled(1.0 / tr))
}

/// `Ξ̂` from two covariance estimates; `prev` and `next` are the segment
/// bounds used in error messages.
pub fn xi_from_covariances(
    prev_cov: &SymMatrix,
    next_cov: &SymMatrix,
    prev: (usize, usize),
    next: (usize, usize),
) -> Result<XiStatistic> {
    let p = trace_normalized(prev_cov, prev.0, prev.1)?;
    let n = trace_normalized(next_cov, next.0, next.1)?;
    let matrix = n.sub(&p)?;
    let norm = matrix.operator_norm();
    Ok(XiStatistic { matrix, norm })
}

/// `Ξ̂^{(k)}` from the pseudo-factor covariances on `prev` and `next`.
pub fn xi_statistic(
    stats: &PseudoFactorStats,
    prev: (usize, usize),
    next: (usize, usize),
    k: usize,
) -> Result<XiStatistic> {
    for &(a, b) in [&prev, &next] {
        if a >= b || b > stats.len() {
            return Err(Error::DegenerateSegment {
                start: a,
                end: b,
                reason: "segment is empty".into(),
            });
        }
    }
    let pc = stats.mode_covariance(k, prev.0, prev.1)?;
    let nc = stats.mode_covariance(k, next.0, next.1)?;
    xi_from_covariances(&pc, &nc, prev, next)
}

/// `T^{-1/2} + p^{-1}`.
pub fn zeta_scale(t: usize, p: usize) -> f64 {
    1.0 / (t as f64).sqrt() + 1.0 / p as f64
}

/// `ζ = multiplier · (T^{-1/2} + p^{-1})`.
pub fn threshold_zeta(t: usize, p: usize, multiplier: f64) -> f64 {
    multiplier * zeta_scale(t, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeIdConfig {
    pub endpoints: EndpointMode,
    pub zeta_multiplier: f64,
}

impl Default for ModeIdConfig {
    fn default() -> Self {
        Self {
            endpoints: EndpointMode::Practical,
            zeta_multiplier: DEFAULT_ZETA_MULTIPLIER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeModes {
    pub location: usize,
    pub endpoints: AdjustedEndpoints,
    pub prev_segment: (usize, usize),
    pub next_segment: (usize, usize),
    pub xi: Vec<XiStatistic>,
    /// 0-based modes with `‖Ξ̂‖ > ζ`, ascending.
    pub modes: Vec<usize>,
}

impl ChangeModes {
    pub fn xi_norms(&self) -> Vec<f64> {
        self.xi.iter().map(|x| x.norm).collect()
    }

    pub fn is_identifiable(&self) -> bool {
        !self.modes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeIdResult {
    pub zeta: f64,
    pub zeta_multiplier: f64,
    pub endpoint_mode: EndpointMode,
    pub changes: Vec<ChangeModes>,
}

impl ModeIdResult {
    pub fn mode_sets(&self) -> Vec<Vec<usize>> {
        self.changes.iter().map(|c| c.modes.clone()).collect()
    }
}

/// Segment pairs `(θ̂_{j−1}⁺, θ̂_j⁻]` and `(θ̂_j⁺, θ̂_{j+1}⁻]` around each change.
pub fn change_segments(
    t: usize,
    endpoints: &[AdjustedEndpoints],
) -> Vec<((usize, usize), (usize, usize))> {
    let q = endpoints.len();
    (0..q)
        .map(|j| {
            let prev_start = if j == 0 { 0 } else { endpoints[j - 1].plus };
            let next_end = if j + 1 == q { t } else { endpoints[j + 1].minus };
            (
                (prev_start, endpoints[j].minus),
                (endpoints[j].plus, next_end),
            )
        })
        .collect()
}

/// Computes `Ξ̂_j^{(k)}` for every change and mode and thresholds at `ζ`.
///
/// `p` is the total dimension `Π p_k` of the observed tensor.
pub fn identify_modes(
    stats: &PseudoFactorStats,
    locations: &[usize],
    finer: &[SeededInterval],
    p: usize,
    cfg: &ModeIdConfig,
) -> Result<ModeIdResult> {
    if locations.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("change points must be strictly increasing".into()));
    }
    if !(cfg.zeta_multiplier >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "zeta multiplier {} is not a nonnegative number",
            cfg.zeta_multiplier
        )));
    }
    let t = stats.len();
    let zeta = threshold_zeta(t, p, cfg.zeta_multiplier);
    let endpoints = adjusted_endpoints(locations, finer, cfg.endpoints);
    let segments = change_segments(t, &endpoints);
    let order = stats.ranks().len();
    let mut changes = Vec::with_capacity(locations.len());
    for ((&location, ep), (prev, next)) in locations.iter().zip(endpoints).zip(segments) {
        let xi = (0..order)
            .map(|k| xi_statistic(stats, prev, next, k))
            .collect::<Result<Vec<_>>>()?;
        let modes = (0..order).filter(|&k| xi[k].norm > zeta).collect();
        changes.push(ChangeModes {
            location,
            endpoints: ep,
            prev_segment: prev,
            next_segment: next,
            xi,
            modes,
        });
    }
    Ok(ModeIdResult {
        zeta,
        zeta_multiplier: cfg.zeta_multiplier,
        endpoint_mode: cfg.endpoints,
        changes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::intervals::generate_seeded_intervals;

    #[test]
    fn theoretical_endpoints_example() {
        let s = generate_seeded_intervals(16, 2.0).unwrap();
        let e = adjusted_endpoints(&[9], &s.finer, EndpointMode::Theoretical);
        assert_eq!((e[0].minus, e[0].plus), (4, 14));
        let e = adjusted_endpoints(&[9], &s.finer, EndpointMode::Practical);
        assert_eq!((e[0].minus, e[0].plus), (9, 9));
        // θ̂ = 8 is an endpoint: b ≤ θ̂ admits (4, 8], a > θ̂ excludes (8, 12].
        let e = adjusted_endpoints(&[8], &s.finer, EndpointMode::Theoretical);
        assert_eq!((e[0].minus, e[0].plus), (4, 14));
        let e = adjusted_endpoints(&[2, 15], &s.finer, EndpointMode::Theoretical);
        assert!(e[0].minus_fallback && e[0].minus == 2);
        assert!(e[1].plus_fallback && e[1].plus == 15);
    }

    #[test]
    fn hand_xi_example() {
        let prev = SymMatrix::identity(2);
        let next = SymMatrix::from_diagonal(&[3.0, 1.0]);
        let xi = xi_from_covariances(&prev, &next, (0, 1), (1, 2)).unwrap();
        assert!((xi.matrix.get(0, 0) - 0.25).abs() < 1e-15);
        assert!((xi.matrix.get(1, 1) + 0.25).abs() < 1e-15);
        assert_eq!(xi.matrix.get(1, 0), 0.0);
        assert!((xi.norm - 0.25).abs() < 1e-15);
        assert!(xi.matrix.trace().abs() < 1e-15);
    }

    #[test]
    fn zero_trace_is_degenerate() {
        let z = SymMatrix::zeros(2);
        let err = xi_from_covariances(&z, &SymMatrix::identity(2), (0, 3), (3, 5)).unwrap_err();
        assert!(matches!(err, Error::DegenerateSegment { start: 0, end: 3, .. }));
    }

    #[test]
    fn zeta_arithmetic() {
        assert!((threshold_zeta(400, 1000, 3.5) - 0.1785).abs() < 1e-15);
        assert!(threshold_zeta(1600, 8000, 3.5) < threshold_zeta(400, 1000, 3.5));
    }

    #[test]
    fn identify_on_scalar_series() {
        // K = 1, r = 2: variance of the first coordinate quadruples at t = 10.
        let mut v = Vec::new();
        for t in 0..20 {
            let a = if t < 10 { 1.0 } else { 4.0 };
            v.extend([a, 0.0, 1.0]);
        }
        let stats = PseudoFactorStats::from_values(vec![2], 20, v).unwrap();
        let low = ModeIdConfig {
            zeta_multiplier: 1.0,
            ..ModeIdConfig::default()
        };
        let r = identify_modes(&stats, &[10], &[], 50, &low).unwrap();
        let c = &r.changes[0];
        assert_eq!(c.prev_segment, (0, 10));
        assert_eq!(c.next_segment, (10, 20));
        // diag(4,1)/5 − diag(1,1)/2 = diag(0.3, −0.3)
        assert!((c.xi[0].norm - 0.3).abs() < 1e-12);
        assert_eq!(c.modes, vec![0]);
        let high = ModeIdConfig {
            zeta_multiplier: 10.0,
            ..ModeIdConfig::default()
        };
        let r = identify_modes(&stats, &[10], &[], 50, &high).unwrap();
        assert!(!r.changes[0].is_identifiable());
        assert!(identify_modes(&stats, &[10, 10], &[], 50, &high).is_err());
    }
}
