//! The regression threshold `π` for the detector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::vech_len;

/// Coefficients of
/// `π = β₀ + β₁ √d + β₂ √ln T + β₃ ln ln T / √ln T + β₄ / √ln T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCoefficients {
    pub intercept: f64,
    pub sqrt_d: f64,
    pub sqrt_log_t: f64,
    pub loglog_t_over_sqrt_log_t: f64,
    pub inv_sqrt_log_t: f64,
}

pub const COEFFICIENT_NAMES: [&str; 5] = [
    "intercept",
    "sqrt_d",
    "sqrt_logT",
    "loglogT_over_sqrtlogT",
    "inv_sqrtlogT",
];

/// Shipped calibration, fitted on the full calibration grid; the same
/// values are in `data/pi_coefficients.txt`.
pub const DEFAULT_COEFFICIENTS: ThresholdCoefficients = ThresholdCoefficients {
    intercept: -242.28690750882348,
    sqrt_d: 0.7363113615499617,
    sqrt_log_t: 22.54553115482208,
    loglog_t_over_sqrt_log_t: 166.2360913038631,
    inv_sqrt_log_t: 174.63368290344488,
};

impl ThresholdCoefficients {
    pub fn from_array(b: [f64; 5]) -> Self {
        Self {
            intercept: b[0],
            sqrt_d: b[1],
            sqrt_log_t: b[2],
            loglog_t_over_sqrt_log_t: b[3],
            inv_sqrt_log_t: b[4],
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.intercept,
            self.sqrt_d,
            self.sqrt_log_t,
            self.loglog_t_over_sqrt_log_t,
            self.inv_sqrt_log_t,
        ]
    }

    /// Parses `name=value` lines. Blank lines and `#` comments are skipped;
    /// each of the five names must appear exactly once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values: [Option<f64>; 5] = [None; 5];
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected name=value", n + 1)))?;
            let idx = COEFFICIENT_NAMES
                .iter()
                .position(|c| *c == name.trim())
                .ok_or_else(|| {
                    Error::Parse(format!("line {}: unknown coefficient `{}`", n + 1, name.trim()))
                })?;
            let v: f64 = value.trim().parse().map_err(|_| {
                Error::Parse(format!("line {}: `{}` is not a number", n + 1, value.trim()))
            })?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("line {}: coefficient is not finite", n + 1)));
            }
            if values[idx].replace(v).is_some() {
                return Err(Error::Parse(format!(
                    "line {}: duplicate coefficient `{}`",
                    n + 1,
                    COEFFICIENT_NAMES[idx]
                )));
            }
        }
        let mut out = [0.0; 5];
        for (i, v) in values.iter().enumerate() {
            out[i] = v.ok_or_else(|| {
                Error::Parse(format!("missing coefficient `{}`", COEFFICIENT_NAMES[i]))
            })?;
        }
        Ok(Self::from_array(out))
    }

    /// Five `name=value` lines; values round-trip exactly.
    pub fn to_file_string(&self) -> String {
        COEFFICIENT_NAMES
            .iter()
            .zip(self.to_array())
            .map(|(n, v)| format!("{n}={v:?}\n"))
            .collect()
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&crate::io::read_text(path)?)
    }
}

/// `d = Σ_k r_k (r_k + 1) / 2`.
pub fn vech_dimension(ranks: &[usize]) -> usize {
    ranks.iter().map(|&r| vech_len(r)).sum()
}

/// `(1, √d, √ln T, ln ln T / √ln T, 1 / √ln T)`.
pub fn regressors(t: usize, d: usize) -> [f64; 5] {
    let lt = (t as f64).ln();
    let s = lt.sqrt();
    [1.0, (d as f64).sqrt(), s, lt.ln() / s, 1.0 / s]
}

/// The threshold for sample size `t` and factor ranks, floored at zero.
pub fn threshold_pi(t: usize, ranks: &[usize], coeffs: &ThresholdCoefficients) -> f64 {
    let x = regressors(t, vech_dimension(ranks));
    let v: f64 = x.iter().zip(coeffs.to_array()).map(|(x, b)| x * b).sum();
    v.max(0.0)
}
