//! Monte Carlo calibration of the detection and mode thresholds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{estimate_loadings, estimate_pseudo_factors};
use crate::modeid::{xi_statistic, zeta_scale};
use crate::segmentation::intervals::{default_mu, default_trim, generate_seeded_intervals};
use crate::segmentation::threshold::{regressors, vech_dimension, ThresholdCoefficients};
use crate::segmentation::tfmseg::max_detector;
use crate::segmentation::weight_matrix;
use crate::sim::montecarlo::run_replications;
use crate::sim::{generate, Scenario, SimScenario, Spacing};
use crate::stats::PseudoFactorStats;

/// Sample quantile with linear interpolation between order statistics
/// (`h = (n − 1) q`), the default of R's `quantile`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return Err(Error::Calibration(format!(
            "quantile {q} of {} values is undefined",
            values.len()
        )));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeastSquaresFit {
    pub coefficients: Vec<f64>,
    pub residual_ss: f64,
    /// Numerical rank of the design.
    pub rank: usize,
    /// `None` when the response is constant.
    pub r2: Option<f64>,
    /// `None` when there are no residual degrees of freedom.
    pub adj_r2: Option<f64>,
}

/// Minimum-norm least squares through the SVD. The first column of `rows`
/// is expected to be the intercept; adjusted `R²` uses `n − k` residual
/// degrees of freedom with `k` columns.
pub fn fit_least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LeastSquaresFit> {
    let n = rows.len();
    if n == 0 || n != y.len() {
        return Err(Error::Calibration(format!(
            "{n} design rows for {} responses",
            y.len()
        )));
    }
    let k = rows[0].len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::Calibration("ragged design matrix".into()));
    }
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let b = DVector::from_column_slice(y);
    let svd = x.clone().svd(true, true);
    let top = svd.singular_values.max();
    let eps = top * 1e-12 * n.max(k) as f64;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let beta = svd
        .solve(&b, eps)
        .map_err(|e| Error::Calibration(format!("least squares failed: {e}")))?;
    let fitted = &x * &beta;
    let residual_ss: f64 = (0..n).map(|i| (y[i] - fitted[i]).powi(2)).sum();
    let mean = y.iter().sum::<f64>() / n as f64;
    let total_ss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = (total_ss > 0.0).then(|| 1.0 - residual_ss / total_ss);
    let adj_r2 = match r2 {
        Some(r2) if n > k => Some(1.0 - (1.0 - r2) * (n - 1) as f64 / (n - k) as f64),
        _ => None,
    };
    Ok(LeastSquaresFit {
        coefficients: beta.iter().copied().collect(),
        residual_ss,
        rank,
        r2,
        adj_r2,
    })
}

/// Which null maximum the threshold regression is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullScan {
    /// Splits `a + ϖ < τ < b − ϖ`, the range the detector is thresholded on.
    #[default]
    Trimmed,
    /// Every split `a < τ < b`.
    Untrimmed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiGrid {
    pub ts: Vec<usize>,
    pub dims: Vec<Vec<usize>>,
    pub ranks: Vec<Vec<usize>>,
    pub rho: f64,
    pub reps: usize,
    pub quantile: f64,
    pub seed: u64,
    #[serde(default)]
    pub scan: NullScan,
}

impl PiGrid {
    /// Eight sample sizes, four shapes, four rank tuples.
    pub fn full(reps: usize) -> Self {
        Self {
            ts: vec![400, 1200, 2000, 2800, 3200, 4000, 4800, 5600],
            dims: vec![vec![10, 10, 10], vec![10, 10, 100], vec![10, 20, 40], vec![20, 20, 20]],
            ranks: vec![vec![2, 2, 2], vec![2, 3, 2], vec![2, 3, 3], vec![3, 3, 3]],
            rho: 0.7,
            reps,
            quantile: 0.9,
            seed: 20_240_901,
            scan: NullScan::Trimmed,
        }
    }

    /// Four sample sizes, two shapes, two rank tuples.
    pub fn reduced(reps: usize) -> Self {
        Self {
            ts: vec![400, 1200, 2800, 5600],
            dims: vec![vec![10, 10, 10], vec![20, 20, 20]],
            ranks: vec![vec![2, 2, 2], vec![3, 3, 3]],
            ..Self::full(reps)
        }
    }

    fn cells(&self) -> Vec<(usize, Vec<usize>, Vec<usize>)> {
        let mut out = Vec::new();
        for &t in &self.ts {
            for d in &self.dims {
                for r in &self.ranks {
                    out.push((t, d.clone(), r.clone()));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiCell {
    pub t: usize,
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub d: usize,
    /// Empirical quantile of the null maxima under the grid's scan.
    pub value: f64,
    /// Quantiles of the trimmed and untrimmed maxima.
    pub trimmed: f64,
    pub untrimmed: f64,
}

impl PiCell {
    pub fn get(&self, scan: NullScan) -> f64 {
        match scan {
            NullScan::Trimmed => self.trimmed,
            NullScan::Untrimmed => self.untrimmed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiCalibration {
    pub cells: Vec<PiCell>,
    pub fit: LeastSquaresFit,
    pub coefficients: ThresholdCoefficients,
}

/// Null maxima of one series, with loadings estimated at the true factor
/// numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullMaxima {
    pub trimmed: f64,
    pub untrimmed: f64,
}

impl NullMaxima {
    pub fn get(&self, scan: NullScan) -> f64 {
        match scan {
            NullScan::Trimmed => self.trimmed,
            NullScan::Untrimmed => self.untrimmed,
        }
    }
}

pub fn null_maxima(sc: &SimScenario) -> Result<NullMaxima> {
    let (series, _) = generate(sc)?;
    let loadings = estimate_loadings(&series, &sc.ranks)?;
    let factors = estimate_pseudo_factors(&series, &loadings)?;
    let stats = PseudoFactorStats::new(&factors)?;
    let weight = weight_matrix(&stats)?;
    let iv = generate_seeded_intervals(sc.t, default_mu(sc.t))?;
    Ok(NullMaxima {
        trimmed: max_detector(&stats, &weight, &iv.intervals, default_trim(sc.t))?,
        untrimmed: max_detector(&stats, &weight, &iv.intervals, 0)?,
    })
}

/// Least-squares fit of the threshold regression to `cells`, using the
/// quantile selected by `scan`.
pub fn fit_pi(cells: &[PiCell], scan: NullScan) -> Result<(LeastSquaresFit, ThresholdCoefficients)> {
    let rows: Vec<Vec<f64>> = cells.iter().map(|c| regressors(c.t, c.d).to_vec()).collect();
    let y: Vec<f64> = cells.iter().map(|c| c.get(scan)).collect();
    let fit = fit_least_squares(&rows, &y)?;
    let b = &fit.coefficients;
    let coefficients = ThresholdCoefficients::from_array([b[0], b[1], b[2], b[3], b[4]]);
    Ok((fit, coefficients))
}

/// Simulates the null scenario on every grid cell, takes the quantile of
/// the per-replication maxima and regresses it on the threshold regressors.
pub fn calibrate_pi(grid: &PiGrid) -> Result<PiCalibration> {
    calibrate_pi_with_progress(grid, |_, _| {})
}

pub fn calibrate_pi_with_progress(
    grid: &PiGrid,
    mut progress: impl FnMut(usize, &PiCell),
) -> Result<PiCalibration> {
    let cells = grid.cells();
    if cells.is_empty() || grid.reps == 0 {
        return Err(Error::Calibration("empty calibration grid".into()));
    }
    let mut out = Vec::with_capacity(cells.len());
    for (idx, (t, dims, ranks)) in cells.into_iter().enumerate() {
        let base = SimScenario::new(Scenario::S0, t, dims.clone())
            .with_ranks(ranks.clone())
            .with_rho(grid.rho);
        let maxima = run_replications(grid.reps, |rep| {
            null_maxima(&base.clone().with_seed(grid.seed, ((idx as u64) << 32) | rep))
        })?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let pick = |scan| maxima.iter().map(|m| m.get(scan)).collect::<Vec<_>>();
        let trimmed = quantile(&pick(NullScan::Trimmed), grid.quantile)?;
        let untrimmed = quantile(&pick(NullScan::Untrimmed), grid.quantile)?;
        let mut cell = PiCell {
            t,
            d: vech_dimension(&ranks),
            dims,
            ranks,
            value: 0.0,
            trimmed,
            untrimmed,
        };
        cell.value = cell.get(grid.scan);
        progress(idx, &cell);
        out.push(cell);
    }
    let (fit, coefficients) = fit_pi(&out, grid.scan)?;
    Ok(PiCalibration {
        cells: out,
        fit,
        coefficients,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaGrid {
    pub scenario: Scenario,
    pub ts: Vec<usize>,
    pub dims: Vec<Vec<usize>>,
    pub rho: f64,
    pub spacing: Spacing,
    pub reps: usize,
    pub quantile: f64,
    pub seed: u64,
}

impl ZetaGrid {
    pub fn full(scenario: Scenario, reps: usize) -> Self {
        Self {
            scenario,
            ts: vec![400, 800, 1600, 3200],
            dims: vec![vec![10, 10, 10], vec![10, 10, 100], vec![10, 20, 40], vec![20, 20, 20]],
            rho: 0.0,
            spacing: Spacing::Equal,
            reps,
            quantile: 0.99,
            seed: 20_240_902,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaCalibration {
    pub multiplier: f64,
    /// Number of pooled statistics.
    pub pooled: usize,
}

/// Scaled statistics `‖Ξ̂_j^{(k)}‖ / (T^{-1/2} + p^{-1})` at the true change
/// points for modes the change does not involve.
pub fn null_scaled_xi(sc: &SimScenario) -> Result<Vec<f64>> {
    let (series, truth) = generate(sc)?;
    let loadings = estimate_loadings(&series, &sc.ranks)?;
    let factors = estimate_pseudo_factors(&series, &loadings)?;
    let stats = PseudoFactorStats::new(&factors)?;
    let scale = zeta_scale(sc.t, series.obs_size());
    let mut bounds = vec![0];
    bounds.extend_from_slice(&truth.locations);
    bounds.push(sc.t);
    let mut out = Vec::new();
    for j in 0..truth.q() {
        let prev = (bounds[j], bounds[j + 1]);
        let next = (bounds[j + 1], bounds[j + 2]);
        for k in 0..sc.dims.len() {
            if !truth.mode_sets[j].contains(&k) {
                out.push(xi_statistic(&stats, prev, next, k)?.norm / scale);
            }
        }
    }
    Ok(out)
}

pub fn calibrate_zeta(grid: &ZetaGrid) -> Result<ZetaCalibration> {
    let mut pooled = Vec::new();
    let mut idx = 0u64;
    for &t in &grid.ts {
        for dims in &grid.dims {
            let base = SimScenario::new(grid.scenario, t, dims.clone())
                .with_rho(grid.rho)
                .with_spacing(grid.spacing);
            let vals = run_replications(grid.reps, |rep| {
                null_scaled_xi(&base.clone().with_seed(grid.seed, (idx << 32) | rep))
            })?;
            for v in vals {
                pooled.extend(v?);
            }
            idx += 1;
        }
    }
    Ok(ZetaCalibration {
        multiplier: quantile(&pooled, grid.quantile)?,
        pooled: pooled.len(),
    })
}
