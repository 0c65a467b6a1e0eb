//! Vectorised pseudo-factor second moments and their prefix sums.

use crate::error::{Error, Result};
use crate::matrix::{vech_len, SymMatrix};
use crate::series::TensorSeries;
use crate::tensor::accumulate_mode_gram;

/// `V̂_t = (vech(mat_1 Ĝ_t mat_1ᵀ)ᵀ, …, vech(mat_K Ĝ_t mat_Kᵀ)ᵀ)ᵀ` for every
/// `t`, with prefix sums so that interval means cost `O(d)`.
#[derive(Debug, Clone)]
pub struct PseudoFactorStats {
    ranks: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
    len: usize,
    /// Row `t` holds `V̂_t`.
    values: Vec<f64>,
    /// Row `t` holds `Σ_{s < t} V̂_s`; `len + 1` rows.
    prefix: Vec<f64>,
}

impl PseudoFactorStats {
    pub fn new(factors: &TensorSeries) -> Result<Self> {
        factors.require_complete()?;
        let ranks = factors.dims().to_vec();
        let dim: usize = ranks.iter().map(|&r| vech_len(r)).sum();
        let mut values = Vec::with_capacity(dim * factors.len());
        let mut gram = Vec::new();
        for t in 0..factors.len() {
            let g = factors.observation(t);
            for (k, &r) in ranks.iter().enumerate() {
                gram.clear();
                gram.resize(r * r, 0.0);
                accumulate_mode_gram(g, &ranks, k, 1.0, &mut gram);
                for j in 0..r {
                    for i in j..r {
                        values.push(gram[i + j * r]);
                    }
                }
            }
        }
        Self::from_values(ranks, factors.len(), values)
    }

    /// Builds from precomputed `V̂_t` rows, laid out as in [`Self::v`].
    pub fn from_values(ranks: Vec<usize>, len: usize, values: Vec<f64>) -> Result<Self> {
        let dim: usize = ranks.iter().map(|&r| vech_len(r)).sum();
        if ranks.is_empty() || ranks.contains(&0) {
            return Err(Error::InvalidRank(format!("invalid ranks {ranks:?}")));
        }
        if values.len() != dim * len {
            return Err(Error::InvalidShape(format!(
                "{len} rows of dimension {dim} need {} values, got {}",
                dim * len,
                values.len()
            )));
        }
        let mut offsets = Vec::with_capacity(ranks.len() + 1);
        offsets.push(0);
        for &r in &ranks {
            offsets.push(offsets.last().unwrap() + vech_len(r));
        }
        let mut prefix = vec![0.0; dim * (len + 1)];
        for t in 0..len {
            let (done, rest) = prefix.split_at_mut((t + 1) * dim);
            let prev = &done[t * dim..];
            let row = &values[t * dim..(t + 1) * dim];
            for ((dst, p), v) in rest[..dim].iter_mut().zip(prev).zip(row) {
                *dst = p + v;
            }
        }
        Ok(Self {
            ranks,
            offsets,
            dim,
            len,
            values,
            prefix,
        })
    }

    /// `d = Σ_k r_k (r_k + 1) / 2`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// Coordinates of mode `k`'s block inside `V̂_t`.
    pub fn block_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    pub fn v(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    /// `Σ_{s < t} V̂_s`.
    pub fn prefix(&self, t: usize) -> &[f64] {
        &self.prefix[t * self.dim..(t + 1) * self.dim]
    }

    fn check(&self, a: usize, b: usize) -> Result<()> {
        if a >= b || b > self.len {
            return Err(Error::EmptyInterval { start: a, end: b });
        }
        Ok(())
    }

    /// Mean of `V̂_t` over `(a, b]`, written into `out`.
    pub fn interval_mean_into(&self, a: usize, b: usize, out: &mut [f64]) -> Result<()> {
        self.check(a, b)?;
        let n = (b - a) as f64;
        for ((o, hi), lo) in out.iter_mut().zip(self.prefix(b)).zip(self.prefix(a)) {
            *o = (hi - lo) / n;
        }
        Ok(())
    }

    pub fn interval_mean(&self, a: usize, b: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.interval_mean_into(a, b, &mut out)?;
        Ok(out)
    }

    /// `Γ̂_{G,a,b}^{(k)} = (b − a)⁻¹ Σ_{t ∈ (a, b]} mat_k Ĝ_t mat_k Ĝ_tᵀ`.
    pub fn mode_covariance(&self, k: usize, a: usize, b: usize) -> Result<SymMatrix> {
        if k >= self.ranks.len() {
            return Err(Error::ModeOutOfRange {
                mode: k,
                order: self.ranks.len(),
            });
        }
        self.check(a, b)?;
        let range = self.block_range(k);
        let n = (b - a) as f64;
        let lower = self.prefix(b)[range.clone()]
            .iter()
            .zip(&self.prefix(a)[range])
            .map(|(hi, lo)| (hi - lo) / n)
            .collect();
        SymMatrix::from_vech(self.ranks[k], lower)
    }
}
