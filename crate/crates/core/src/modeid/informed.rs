use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{
    accumulate_projected_gram, estimate_loadings_on, estimate_ranks_on, mode_covariance,
    LoadingSet, Provenance,
};
use crate::linalg::{leading_eigenvectors, projector};
use crate::matrix::{Matrix, SymMatrix};
use crate::series::TensorSeries;

/// Loading estimate for one mode over a maximal run of segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLoading {
    pub mode: usize,
    /// First and one-past-last segment index of the run.
    pub segments: (usize, usize),
    pub start: usize,
    pub end: usize,
    /// Whether more than one segment was pooled.
    pub pooled: bool,
    pub loading: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeInformedLoadings {
    /// Segment boundaries `(θ̂_{j−1}, θ̂_j]`.
    pub segments: Vec<(usize, usize)>,
    /// Independent estimates on each segment.
    pub segment_wise: Vec<LoadingSet>,
    /// Factor numbers estimated on each segment.
    pub segment_ranks: Vec<Vec<usize>>,
    /// Per mode, the runs in time order.
    pub runs: Vec<Vec<RunLoading>>,
}

impl ModeInformedLoadings {
    /// Mode-informed loading of mode `k` on segment `j`.
    pub fn loading(&self, j: usize, k: usize) -> &Matrix {
        &self.runs[k]
            .iter()
            .find(|r| r.segments.0 <= j && j < r.segments.1)
            .expect("runs cover every segment")
            .loading
    }

    /// Mode-informed loadings of every mode on segment `j`.
    pub fn segment_set(&self, j: usize) -> LoadingSet {
        let (start, end) = self.segments[j];
        LoadingSet {
            loadings: (0..self.runs.len()).map(|k| self.loading(j, k).clone()).collect(),
            provenance: Provenance::ModeInformed { start, end },
        }
    }
}

/// Splits segments `0..=q` into maximal runs for each mode: a run ends at
/// change `j` exactly when mode `k` is in `mode_sets[j]`.
fn mode_runs(order: usize, mode_sets: &[Vec<usize>]) -> Vec<Vec<(usize, usize)>> {
    let segs = mode_sets.len() + 1;
    (0..order)
        .map(|k| {
            let mut runs = Vec::new();
            let mut first = 0;
            for (j, set) in mode_sets.iter().enumerate() {
                if set.contains(&k) {
                    runs.push((first, j + 1));
                    first = j + 1;
                }
            }
            runs.push((first, segs));
            runs
        })
        .collect()
}

/// Mode-informed loading estimation.
///
/// Every segment between consecutive change points gets the two-step
/// estimator with its own estimated factor numbers. For each mode `k`,
/// segments not separated by a change involving `k` are pooled: the
/// projected second moments of all segments in the run are summed, where
/// segment `j` projects mode `ℓ ≠ k` on the preliminary estimate over
/// mode `ℓ`'s own run if that run is pooled, and on the segment-wise
/// estimate otherwise. The pooled loading is `√p_k` times the leading
/// `ranks[k]` eigenvectors. Runs of one segment keep the segment-wise
/// estimate.
pub fn mode_informed_loadings(
    series: &TensorSeries,
    locations: &[usize],
    mode_sets: &[Vec<usize>],
    ranks: &[usize],
) -> Result<ModeInformedLoadings> {
    series.require_complete()?;
    let dims = series.dims().to_vec();
    let order = dims.len();
    let t = series.len();
    if mode_sets.len() != locations.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} change points but {} mode sets",
            locations.len(),
            mode_sets.len()
        )));
    }
    if ranks.len() != order {
        return Err(Error::InvalidRank(format!("expected {order} ranks, got {}", ranks.len())));
    }
    if let Some(&k) = mode_sets.iter().flatten().find(|&&k| k >= order) {
        return Err(Error::ModeOutOfRange { mode: k, order });
    }
    let mut bounds = vec![0];
    bounds.extend_from_slice(locations);
    bounds.push(t);
    if bounds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "change points must be strictly increasing inside (0, T)".into(),
        ));
    }
    let segments: Vec<(usize, usize)> = bounds.windows(2).map(|w| (w[0], w[1])).collect();
    for &(a, b) in &segments {
        if b - a < 2 {
            return Err(Error::SegmentTooShort { start: a, end: b });
        }
    }

    let mut segment_ranks = Vec::with_capacity(segments.len());
    let mut segment_wise = Vec::with_capacity(segments.len());
    for &(a, b) in &segments {
        let r = estimate_ranks_on(series, a, b)?.ranks;
        segment_wise.push(estimate_loadings_on(series, &r, a, b)?);
        segment_ranks.push(r);
    }

    let runs = mode_runs(order, mode_sets);
    // Preliminary loadings of each mode over each of its pooled runs.
    let mut prelim: Vec<Vec<Option<Matrix>>> = Vec::with_capacity(order);
    for (k, mode_run) in runs.iter().enumerate() {
        let mut per_run = Vec::with_capacity(mode_run.len());
        for &(s0, s1) in mode_run {
            if s1 - s0 > 1 {
                let (a, b) = (segments[s0].0, segments[s1 - 1].1);
                let cov = mode_covariance(series, k, a, b)?;
                let scale = (dims[k] as f64).sqrt();
                per_run.push(Some(leading_eigenvectors(&cov, ranks[k], scale)?.0));
            } else {
                per_run.push(None);
            }
        }
        prelim.push(per_run);
    }
    let projection_for = |l: usize, j: usize| -> &Matrix {
        let idx = runs[l]
            .iter()
            .position(|&(s0, s1)| s0 <= j && j < s1)
            .expect("runs cover every segment");
        prelim[l][idx]
            .as_ref()
            .unwrap_or(&segment_wise[j].loadings[l])
    };

    let mut out_runs = Vec::with_capacity(order);
    for (k, mode_run) in runs.iter().enumerate() {
        let pk = dims[k];
        let mut list = Vec::with_capacity(mode_run.len());
        for &(s0, s1) in mode_run {
            let (start, end) = (segments[s0].0, segments[s1 - 1].1);
            let pooled = s1 - s0 > 1;
            let loading = if pooled {
                let mut acc = vec![0.0; pk * pk];
                for j in s0..s1 {
                    let proj: Vec<&Matrix> = (0..order).map(|l| projection_for(l, j)).collect();
                    let (a, b) = segments[j];
                    accumulate_projected_gram(series, k, a, b, &proj, &mut acc);
                }
                let scale = 1.0 / ((end - start) as f64 * pk as f64);
                let mut lower = Vec::with_capacity(pk * (pk + 1) / 2);
                for c in 0..pk {
                    for r in c..pk {
                        lower.push(0.5 * (acc[r + c * pk] + acc[c + r * pk]) * scale);
                    }
                }
                let cov = SymMatrix::from_vech(pk, lower)?;
                leading_eigenvectors(&cov, ranks[k], (pk as f64).sqrt())?.0
            } else {
                segment_wise[s0].loadings[k].clone()
            };
            list.push(RunLoading {
                mode: k,
                segments: (s0, s1),
                start,
                end,
                pooled,
                loading,
            });
        }
        out_runs.push(list);
    }
    Ok(ModeInformedLoadings {
        segments,
        segment_wise,
        segment_ranks,
        runs: out_runs,
    })
}

/// `‖P_Â − P_A‖` for the orthogonal projectors onto the column spaces.
pub fn loading_distance(estimate: &Matrix, target: &Matrix) -> Result<f64> {
    if estimate.rows() != target.rows() {
        return Err(Error::DimensionMismatch(format!(
            "loadings have {} and {} rows",
            estimate.rows(),
            target.rows()
        )));
    }
    Ok(projector(estimate)?.sub(&projector(target)?)?.operator_norm())
}
