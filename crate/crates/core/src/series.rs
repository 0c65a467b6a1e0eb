use crate::error::{Error, Result};
use crate::tensor::{check_dims, Tensor};

/// A time series of equally shaped tensors stored back to back.
///
/// Time is zero-based in the API: observation `t` is the one-based
/// `X_{t+1}`, and an interval `(a, b]` covers observations `a..b`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSeries {
    dims: Vec<usize>,
    len: usize,
    obs_size: usize,
    data: Vec<f64>,
    /// `true` where the entry was observed.
    mask: Option<Vec<bool>>,
}

impl TensorSeries {
    pub fn new(dims: Vec<usize>, len: usize, data: Vec<f64>) -> Result<Self> {
        let p = check_dims(&dims)?;
        if data.len() != p * len {
            return Err(Error::InvalidShape(format!(
                "{len} observations of shape {dims:?} need {} values, got {}",
                p * len,
                data.len()
            )));
        }
        Ok(Self {
            dims,
            len,
            obs_size: p,
            data,
            mask: None,
        })
    }

    pub fn from_observations(obs: &[Tensor]) -> Result<Self> {
        let first = obs
            .first()
            .ok_or_else(|| Error::SeriesTooShort("no observations".into()))?;
        let dims = first.dims().to_vec();
        let mut data = Vec::with_capacity(first.len() * obs.len());
        for (t, x) in obs.iter().enumerate() {
            if x.dims() != dims.as_slice() {
                return Err(Error::DimensionMismatch(format!(
                    "observation {t} has shape {:?}, expected {dims:?}",
                    x.dims()
                )));
            }
            data.extend_from_slice(x.data());
        }
        Self::new(dims, obs.len(), data)
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.data.len() {
            return Err(Error::InvalidShape(format!(
                "mask has {} entries, series has {}",
                mask.len(),
                self.data.len()
            )));
        }
        self.mask = Some(mask);
        Ok(self)
    }

    #[inline]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Number of observations `T`.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Entries per observation, `p = Π p_k`.
    #[inline]
    pub fn obs_size(&self) -> usize {
        self.obs_size
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    /// Whether any entry is flagged as missing.
    pub fn has_missing(&self) -> bool {
        self.mask.as_ref().is_some_and(|m| m.iter().any(|o| !o))
    }

    pub fn require_complete(&self) -> Result<()> {
        if self.has_missing() {
            Err(Error::UnsupportedMissing)
        } else {
            Ok(())
        }
    }

    #[inline]
    pub fn observation(&self, t: usize) -> &[f64] {
        let p = self.obs_size();
        &self.data[t * p..(t + 1) * p]
    }

    pub fn tensor(&self, t: usize) -> Tensor {
        Tensor::new(self.dims.clone(), self.observation(t).to_vec())
            .expect("series shape is validated at construction")
    }

    /// Checks `0 ≤ a < b ≤ T`.
    pub fn check_interval(&self, a: usize, b: usize) -> Result<()> {
        if a >= b || b > self.len {
            return Err(Error::EmptyInterval { start: a, end: b });
        }
        Ok(())
    }
}
