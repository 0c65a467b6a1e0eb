//! Deterministic seeded intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeededInterval {
    pub start: usize,
    pub end: usize,
    pub level: u32,
}

impl SeededInterval {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    /// Whether `t` lies in `(start, end]`.
    pub fn contains(&self, t: usize) -> bool {
        self.start < t && t <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeededIntervalSet {
    /// Sample size the set was built for.
    pub len: usize,
    /// The real-valued `μ` that was requested.
    pub mu: f64,
    /// `⌊μ⌋`, the number of levels in `intervals`.
    pub finest_level: u32,
    pub intervals: Vec<SeededInterval>,
    /// Single-level set at `⌊μ⌋ + 1`.
    pub finer: Vec<SeededInterval>,
    pub trim: usize,
}

/// `μ = log₂(4 ln T)`, so the shortest intervals have length about `0.5 T / ln T`.
pub fn default_mu(t: usize) -> f64 {
    (4.0 * (t as f64).ln()).log2()
}

/// `ϖ = ⌈0.25 T / ln T⌉`.
pub fn default_trim(t: usize) -> usize {
    (0.25 * t as f64 / (t as f64).ln()).ceil() as usize
}

/// Intervals of level `h`: `(⌊(i−1) m_h⌋, ⌈(i+1) m_h⌉]` for
/// `i = 1, …, 2^h − 1` with `m_h = T / 2^h`, in exact integer arithmetic.
pub fn level_intervals(t: usize, h: u32) -> Vec<SeededInterval> {
    let parts = 1usize << h;
    (1..parts)
        .map(|i| SeededInterval {
            start: (i - 1) * t / parts,
            end: ((i + 1) * t).div_ceil(parts).min(t),
            level: h,
        })
        .collect()
}

const MAX_LEVEL: u32 = 40;

/// Multi-level seeded intervals for levels `1..=⌊μ⌋`, duplicates removed
/// (the lowest level keeps the interval), plus the finer set at `⌊μ⌋ + 1`.
/// The trimming defaults to [`default_trim`].
pub fn generate_seeded_intervals(t: usize, mu: f64) -> Result<SeededIntervalSet> {
    if t < 8 {
        return Err(Error::SeriesTooShort(format!(
            "seeded intervals need T >= 8, got {t}"
        )));
    }
    if !(mu >= 1.0) || mu.floor() > MAX_LEVEL as f64 {
        return Err(Error::InvalidConfig(format!(
            "mu must lie in [1, {}], got {mu}",
            MAX_LEVEL + 1
        )));
    }
    let finest_level = mu.floor() as u32;
    let mut seen = std::collections::HashSet::new();
    let mut intervals = Vec::new();
    for h in 1..=finest_level {
        for iv in level_intervals(t, h) {
            if seen.insert((iv.start, iv.end)) {
                intervals.push(iv);
            }
        }
    }
    Ok(SeededIntervalSet {
        len: t,
        mu,
        finest_level,
        intervals,
        finer: level_intervals(t, finest_level + 1),
        trim: default_trim(t),
    })
}

impl SeededIntervalSet {
    pub fn with_trim(mut self, trim: usize) -> Self {
        self.trim = trim;
        self
    }
}
