//! Loading, factor number and pseudo-factor estimation.
//!
//! Loadings are estimated in two steps. A preliminary `Λ̃_k` is `√p_k` times
//! the leading eigenvectors of the scaled mode-`k` sample covariance. Each
//! observation is then projected on the other modes' preliminary loadings,
//! `Y_{k,t} = p_{-k}⁻¹ mat_k(X_t) Λ̃_{-k}`, and the refined `Λ̂_k` is taken
//! from the covariance of the projected data. Pseudo-factors are
//! `Ĝ_t = p⁻¹ X_t ×_k Λ̂_kᵀ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{leading_eigenvectors, sym_eigen};
use crate::matrix::{Matrix, SymMatrix};
use crate::series::TensorSeries;
use crate::tensor::{accumulate_mode_gram, project_modes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    Global,
    Segment { start: usize, end: usize },
    ModeInformed { start: usize, end: usize },
}

/// Mode-wise loading matrices, each scaled so that `Λ̂_kᵀ Λ̂_k = p_k I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingSet {
    pub loadings: Vec<Matrix>,
    pub provenance: Provenance,
}

impl LoadingSet {
    pub fn ranks(&self) -> Vec<usize> {
        self.loadings.iter().map(Matrix::cols).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.loadings.iter().map(Matrix::rows).collect()
    }
}

/// Result of the eigenvalue-ratio factor number estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct RankEstimate {
    pub ranks: Vec<usize>,
    /// Upper bounds `⌈p_k / 3⌉`.
    pub caps: Vec<usize>,
    /// Eigenvalues of the projected covariance per mode, descending.
    pub eigenvalues: Vec<Vec<f64>>,
}

/// Scaled mode-`k` sample covariance over `(a, b]`:
/// `((b − a) p)⁻¹ Σ_t mat_k(X_t) mat_k(X_t)ᵀ`.
pub fn mode_covariance(series: &TensorSeries, mode: usize, a: usize, b: usize) -> Result<SymMatrix> {
    crate::tensor::check_mode(series.dims(), mode)?;
    let mut all = mode_covariances_where(series, a, b, |k| k == mode)?;
    Ok(all.swap_remove(mode).expect("requested mode is computed"))
}

/// Scaled sample covariances for every mode over `(a, b]`.
pub fn mode_covariances(series: &TensorSeries, a: usize, b: usize) -> Result<Vec<SymMatrix>> {
    Ok(mode_covariances_where(series, a, b, |_| true)?
        .into_iter()
        .map(|c| c.expect("all modes computed"))
        .collect())
}

fn mode_covariances_where(
    series: &TensorSeries,
    a: usize,
    b: usize,
    wanted: impl Fn(usize) -> bool,
) -> Result<Vec<Option<SymMatrix>>> {
    series.require_complete()?;
    series.check_interval(a, b)?;
    let dims = series.dims();
    let mut acc: Vec<Option<Vec<f64>>> = dims
        .iter()
        .enumerate()
        .map(|(k, &pk)| wanted(k).then(|| vec![0.0; pk * pk]))
        .collect();
    for t in a..b {
        let x = series.observation(t);
        for (k, buf) in acc.iter_mut().enumerate() {
            if let Some(buf) = buf {
                accumulate_mode_gram(x, dims, k, 1.0, buf);
            }
        }
    }
    let scale = 1.0 / ((b - a) as f64 * series.obs_size() as f64);
    acc.into_iter()
        .enumerate()
        .map(|(k, buf)| {
            buf.map(|buf| pack_scaled(dims[k], &buf, scale)).transpose()
        })
        .collect()
}

fn pack_scaled(n: usize, full: &[f64], scale: f64) -> Result<SymMatrix> {
    let mut lower = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in j..n {
            // average the two triangles so round-off asymmetry cannot leak in
            lower.push(0.5 * (full[i + j * n] + full[j + i * n]) * scale);
        }
    }
    SymMatrix::from_vech(n, lower)
}

fn check_ranks(dims: &[usize], ranks: &[usize]) -> Result<()> {
    if ranks.len() != dims.len() {
        return Err(Error::InvalidRank(format!(
            "expected {} ranks, got {}",
            dims.len(),
            ranks.len()
        )));
    }
    for (k, (&r, &p)) in ranks.iter().zip(dims).enumerate() {
        if r == 0 || r > p {
            return Err(Error::InvalidRank(format!(
                "mode {} rank {r} outside [1, {p}]",
                k + 1
            )));
        }
    }
    Ok(())
}

/// Preliminary loadings `Λ̃_k` from the raw mode covariances over `(a, b]`.
pub fn preliminary_loadings(
    series: &TensorSeries,
    ranks: &[usize],
    a: usize,
    b: usize,
) -> Result<Vec<Matrix>> {
    check_ranks(series.dims(), ranks)?;
    let covs = mode_covariances(series, a, b)?;
    covs.iter()
        .zip(ranks)
        .zip(series.dims())
        .map(|((c, &r), &p)| leading_eigenvectors(c, r, (p as f64).sqrt()).map(|(v, _)| v))
        .collect()
}

/// Accumulates `Σ_t Y_t Y_tᵀ` for mode `mode` with
/// `Y_t = p_{-k}⁻¹ mat_k(X_t) B_{-k}`, where `B_j = projections[j]` for
/// `j ≠ mode`. `acc` is a full `p_k × p_k` column-major buffer.
pub(crate) fn accumulate_projected_gram(
    series: &TensorSeries,
    mode: usize,
    a: usize,
    b: usize,
    projections: &[&Matrix],
    acc: &mut [f64],
) {
    let dims = series.dims();
    let p_minus = (series.obs_size() / dims[mode]) as f64;
    let transposed: Vec<Option<Matrix>> = projections
        .iter()
        .enumerate()
        .map(|(j, m)| (j != mode).then(|| m.transpose()))
        .collect();
    let ms: Vec<Option<&Matrix>> = transposed.iter().map(Option::as_ref).collect();
    let mut scratch = Vec::new();
    let alpha = 1.0 / (p_minus * p_minus);
    for t in a..b {
        let (z, zdims) = project_modes(series.observation(t), dims, &ms, &mut scratch);
        accumulate_mode_gram(&z, &zdims, mode, alpha, acc);
    }
}

/// Projected covariances `Γ̂_Y^{(k)} = (n p_k)⁻¹ Σ_t Y_{k,t} Y_{k,t}ᵀ` for all
/// modes over `(a, b]`, using `prelim` as the projection loadings.
pub fn projected_covariances(
    series: &TensorSeries,
    prelim: &[Matrix],
    a: usize,
    b: usize,
) -> Result<Vec<SymMatrix>> {
    series.require_complete()?;
    series.check_interval(a, b)?;
    let dims = series.dims();
    if prelim.len() != dims.len() || prelim.iter().zip(dims).any(|(m, &p)| m.rows() != p) {
        return Err(Error::DimensionMismatch(
            "projection loadings do not match the series shape".into(),
        ));
    }
    let refs: Vec<&Matrix> = prelim.iter().collect();
    let n = (b - a) as f64;
    (0..dims.len())
        .map(|k| {
            let pk = dims[k];
            let mut acc = vec![0.0; pk * pk];
            accumulate_projected_gram(series, k, a, b, &refs, &mut acc);
            pack_scaled(pk, &acc, 1.0 / (n * pk as f64))
        })
        .collect()
}

/// Two-step projected loading estimator over `(a, b]`.
pub fn estimate_loadings_on(
    series: &TensorSeries,
    ranks: &[usize],
    a: usize,
    b: usize,
) -> Result<LoadingSet> {
    let prelim = preliminary_loadings(series, ranks, a, b)?;
    let covs = projected_covariances(series, &prelim, a, b)?;
    let loadings = covs
        .iter()
        .zip(ranks)
        .zip(series.dims())
        .map(|((c, &r), &p)| leading_eigenvectors(c, r, (p as f64).sqrt()).map(|(v, _)| v))
        .collect::<Result<Vec<_>>>()?;
    let provenance = if a == 0 && b == series.len() {
        Provenance::Global
    } else {
        Provenance::Segment { start: a, end: b }
    };
    Ok(LoadingSet {
        loadings,
        provenance,
    })
}

/// Two-step projected loading estimator over the full sample.
pub fn estimate_loadings(series: &TensorSeries, ranks: &[usize]) -> Result<LoadingSet> {
    estimate_loadings_on(series, ranks, 0, series.len())
}

/// `argmax_{1 ≤ ℓ ≤ cap} λ_ℓ / λ_{ℓ+1}` over descending eigenvalues.
///
/// The first `ℓ` with `λ_{ℓ+1} ≤ ε λ_1` has an infinite ratio and wins
/// outright. Ties among finite ratios go to the smallest `ℓ`.
pub fn eigen_ratio_rank(eigenvalues: &[f64], cap: usize) -> Result<usize> {
    if cap == 0 || eigenvalues.len() < cap + 1 {
        return Err(Error::InvalidRank(format!(
            "need at least {} eigenvalues for rank cap {cap}, got {}",
            cap + 1,
            eigenvalues.len()
        )));
    }
    let floor = f64::EPSILON * eigenvalues[0];
    let mut best = (1, f64::NEG_INFINITY);
    for l in 1..=cap {
        let next = eigenvalues[l];
        if next <= floor {
            return Ok(l);
        }
        let ratio = eigenvalues[l - 1] / next;
        if ratio > best.1 {
            best = (l, ratio);
        }
    }
    Ok(best.0)
}

/// Factor number caps `⌈p_k / 3⌉`.
pub fn rank_caps(dims: &[usize]) -> Vec<usize> {
    dims.iter().map(|&p| p.div_ceil(3)).collect()
}

/// Eigenvalue-ratio factor numbers estimated on `(a, b]`.
pub fn estimate_ranks_on(series: &TensorSeries, a: usize, b: usize) -> Result<RankEstimate> {
    series.check_interval(a, b)?;
    if b - a < 2 {
        return Err(Error::SeriesTooShort(format!(
            "rank estimation needs at least 2 observations, interval ({a}, {b}] has {}",
            b - a
        )));
    }
    let dims = series.dims();
    let caps = rank_caps(dims);
    for (k, (&c, &p)) in caps.iter().zip(dims).enumerate() {
        if c + 1 > p {
            return Err(Error::InvalidRank(format!(
                "mode {} has dimension {p}, too small for the eigenvalue ratio",
                k + 1
            )));
        }
    }
    let prelim = preliminary_loadings(series, &caps, a, b)?;
    let covs = projected_covariances(series, &prelim, a, b)?;
    let mut ranks = Vec::with_capacity(dims.len());
    let mut eigenvalues = Vec::with_capacity(dims.len());
    for (cov, &cap) in covs.iter().zip(&caps) {
        let values = sym_eigen(cov).values;
        ranks.push(eigen_ratio_rank(&values, cap)?);
        eigenvalues.push(values);
    }
    Ok(RankEstimate {
        ranks,
        caps,
        eigenvalues,
    })
}

pub fn estimate_ranks(series: &TensorSeries) -> Result<RankEstimate> {
    estimate_ranks_on(series, 0, series.len())
}

/// `Ĝ_t = p⁻¹ X_t ×_1 Λ̂_1ᵀ ⋯ ×_K Λ̂_Kᵀ` for every `t`.
pub fn estimate_pseudo_factors(series: &TensorSeries, loadings: &LoadingSet) -> Result<TensorSeries> {
    series.require_complete()?;
    let dims = series.dims();
    if loadings.dims() != dims {
        return Err(Error::DimensionMismatch(format!(
            "loadings have row dimensions {:?}, series has {dims:?}",
            loadings.dims()
        )));
    }
    let transposed: Vec<Matrix> = loadings.loadings.iter().map(Matrix::transpose).collect();
    let ms: Vec<Option<&Matrix>> = transposed.iter().map(Some).collect();
    let ranks = loadings.ranks();
    let r: usize = ranks.iter().product();
    let scale = 1.0 / series.obs_size() as f64;
    let mut data = Vec::with_capacity(r * series.len());
    let mut scratch = Vec::new();
    for t in 0..series.len() {
        let (g, _) = project_modes(series.observation(t), dims, &ms, &mut scratch);
        data.extend(g.iter().map(|v| v * scale));
    }
    TensorSeries::new(ranks, series.len(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::projector;
    use crate::tensor::Tensor;

    fn lcg_series(dims: &[usize], len: usize, seed: u64) -> TensorSeries {
        let p: usize = dims.iter().product();
        let mut s = seed;
        let data = (0..p * len)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect();
        TensorSeries::new(dims.to_vec(), len, data).unwrap()
    }

    #[test]
    fn covariance_of_identity_matrix_observation() {
        let s = TensorSeries::new(vec![2, 2], 1, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let c = mode_covariance(&s, 0, 0, 1).unwrap();
        assert_eq!(c, SymMatrix::identity(2).scaled(0.25));
    }

    #[test]
    fn covariance_of_zero_series_is_zero() {
        let s = TensorSeries::new(vec![3, 2], 4, vec![0.0; 24]).unwrap();
        for k in 0..2 {
            let c = mode_covariance(&s, k, 0, 4).unwrap();
            assert!(c.vech().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn covariance_matches_naive_loops() {
        let dims = [3, 4, 2];
        let s = lcg_series(&dims, 6, 17);
        let p = 24.0;
        for k in 0..3 {
            let c = mode_covariance(&s, k, 1, 5).unwrap();
            let mut naive = Matrix::zeros(dims[k], dims[k]);
            for t in 1..5 {
                let u = s.tensor(t).unfold(k).unwrap();
                for i in 0..dims[k] {
                    for j in 0..dims[k] {
                        let v: f64 = (0..u.cols()).map(|c| u.get(i, c) * u.get(j, c)).sum();
                        naive.set(i, j, naive.get(i, j) + v / (4.0 * p));
                    }
                }
            }
            assert!(c.to_matrix().max_abs_diff(&naive) < 1e-14);
        }
        assert!(mode_covariance(&s, 0, 3, 3).is_err());
        assert!(mode_covariance(&s, 3, 0, 3).is_err());
    }

    #[test]
    fn masked_series_fails_loudly() {
        let s = lcg_series(&[4, 4], 5, 3);
        let mut mask = vec![true; 80];
        mask[7] = false;
        let s = s.with_mask(mask).unwrap();
        assert!(matches!(mode_covariance(&s, 0, 0, 5), Err(Error::UnsupportedMissing)));
        assert!(matches!(estimate_loadings(&s, &[1, 1]), Err(Error::UnsupportedMissing)));
    }

    #[test]
    fn eigen_ratio_examples() {
        assert_eq!(eigen_ratio_rank(&[8.0, 4.0, 0.5, 0.25], 2).unwrap(), 2);
        assert_eq!(eigen_ratio_rank(&[100.0, 1.0, 1.0, 1.0, 1.0], 3).unwrap(), 1);
        // exact zero after the second eigenvalue wins over any finite ratio
        assert_eq!(eigen_ratio_rank(&[1000.0, 1.0, 0.0, 0.0], 3).unwrap(), 2);
        assert!(eigen_ratio_rank(&[1.0, 0.5], 2).is_err());
    }

    #[test]
    fn rank_one_noiseless_vector_series() {
        // K = 1, X_t = λ f_t with a unit-norm λ.
        let lambda = [0.6, 0.0, -0.8, 0.0, 0.0];
        let f = [1.0, -2.0, 0.5, 3.0, -1.0, 0.25];
        let mut data = Vec::new();
        for ft in f {
            data.extend(lambda.iter().map(|l| l * ft));
        }
        let s = TensorSeries::new(vec![5], f.len(), data).unwrap();
        let est = estimate_ranks(&s).unwrap();
        assert_eq!(est.ranks, vec![1]);
        let l = estimate_loadings(&s, &[1]).unwrap();
        let truth = Matrix::new(5, 1, lambda.to_vec()).unwrap();
        let diff = projector(&l.loadings[0])
            .unwrap()
            .sub(&projector(&truth).unwrap())
            .unwrap()
            .operator_norm();
        assert!(diff < 1e-12);
        let gram = l.loadings[0].gram();
        assert!((gram.get(0, 0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn pseudo_factors_recover_core_with_orthogonal_loadings() {
        // Λ_k with Λ_kᵀΛ_k = p_k I: scaled columns of a Hadamard-like basis.
        let l1 = Matrix::from_rows(&[&[1.0, 1.0], &[1.0, -1.0], &[1.0, 1.0], &[1.0, -1.0]])
            .unwrap();
        let l2 = Matrix::from_rows(&[&[1.0], &[-1.0]]).unwrap();
        let core = Tensor::new(vec![2, 1], vec![0.7, -1.3]).unwrap();
        let x = core.mode_product(&l1, 0).unwrap().mode_product(&l2, 1).unwrap();
        let s = TensorSeries::from_observations(&[x, Tensor::zeros(vec![4, 2]).unwrap()]).unwrap();
        let set = LoadingSet {
            loadings: vec![l1, l2],
            provenance: Provenance::Global,
        };
        let g = estimate_pseudo_factors(&s, &set).unwrap();
        assert_eq!(g.dims(), &[2, 1]);
        for (a, b) in g.observation(0).iter().zip(core.data()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(g.observation(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pseudo_factors_match_nested_contraction() {
        let dims = [3, 2, 4];
        let s = lcg_series(&dims, 3, 99);
        let ls: Vec<Matrix> = dims
            .iter()
            .zip([2usize, 1, 2])
            .map(|(&p, r)| Matrix::from_fn(p, r, |i, j| ((i * 3 + j * 5) % 7) as f64 / 7.0 - 0.4))
            .collect();
        let set = LoadingSet {
            loadings: ls.clone(),
            provenance: Provenance::Global,
        };
        let g = estimate_pseudo_factors(&s, &set).unwrap();
        for t in 0..3 {
            let x = s.tensor(t);
            for a in 0..2 {
                for c in 0..2 {
                    let mut v = 0.0;
                    for i in 0..3 {
                        for j in 0..2 {
                            for k in 0..4 {
                                v += x.get(&[i, j, k]) * ls[0].get(i, a) * ls[1].get(j, 0) * ls[2].get(k, c);
                            }
                        }
                    }
                    v /= 24.0;
                    let got = g.tensor(t).get(&[a, 0, c]);
                    assert!((got - v).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn loadings_are_scaled_orthonormal_and_deterministic() {
        let s = lcg_series(&[6, 5, 4], 20, 5);
        let a = estimate_loadings(&s, &[2, 2, 1]).unwrap();
        let b = estimate_loadings(&s, &[2, 2, 1]).unwrap();
        assert_eq!(a, b);
        for (l, p) in a.loadings.iter().zip([6.0, 5.0, 4.0]) {
            let g = l.gram().to_matrix();
            let expected = Matrix::identity(l.cols()).scaled(p);
            assert!(g.max_abs_diff(&expected) < 1e-10);
        }
        assert!(estimate_loadings(&s, &[7, 1, 1]).is_err());
        assert!(estimate_loadings(&s, &[1, 1]).is_err());
    }
}
