//! Simulated tensor factor series with loading changes, evaluation
//! metrics, Monte Carlo driver and threshold calibration.

pub mod calibrate;
pub mod metrics;
pub mod montecarlo;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, SymMatrix};
use crate::series::TensorSeries;
use crate::tensor::{check_dims, project_modes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// No change.
    S0,
    /// Three changes, each in one mode.
    S1,
    /// Three changes, some touching several modes.
    S2,
    /// One rank-reducing change in mode 1.
    S3,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scenario::S0 => "S0",
            Scenario::S1 => "S1",
            Scenario::S2 => "S2",
            Scenario::S3 => "S3",
        };
        f.write_str(s)
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S0" => Ok(Scenario::S0),
            "S1" => Ok(Scenario::S1),
            "S2" => Ok(Scenario::S2),
            "S3" => Ok(Scenario::S3),
            other => Err(Error::Parse(format!("unknown scenario `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    /// `⌊0.25T⌋, ⌊0.5T⌋, ⌊0.75T⌋`.
    #[default]
    Equal,
    /// `⌊0.25T⌋, ⌊0.5T⌋, ⌊0.625T⌋`.
    Unequal,
}

impl FromStr for Spacing {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "equal" => Ok(Spacing::Equal),
            "unequal" => Ok(Spacing::Unequal),
            other => Err(Error::Parse(format!("unknown spacing `{other}`"))),
        }
    }
}

impl fmt::Display for Spacing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spacing::Equal => "equal",
            Spacing::Unequal => "unequal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub scenario: Scenario,
    pub t: usize,
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub rho: f64,
    pub spacing: Spacing,
    pub missing: bool,
    pub seed: u64,
    /// Independent random stream, one per replication.
    pub stream: u64,
}

const BURN_IN: usize = 100;

impl SimScenario {
    pub fn new(scenario: Scenario, t: usize, dims: Vec<usize>) -> Self {
        let ranks = vec![3; dims.len()];
        Self {
            scenario,
            t,
            dims,
            ranks,
            rho: 0.0,
            spacing: Spacing::Equal,
            missing: false,
            seed: 0,
            stream: 0,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_spacing(mut self, spacing: Spacing) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn with_ranks(mut self, ranks: Vec<usize>) -> Self {
        self.ranks = ranks;
        self
    }

    pub fn with_seed(mut self, seed: u64, stream: u64) -> Self {
        self.seed = seed;
        self.stream = stream;
        self
    }

    pub fn with_missing(mut self, missing: bool) -> Self {
        self.missing = missing;
        self
    }

    /// True change locations for this scenario.
    pub fn locations(&self) -> Vec<usize> {
        let t = self.t;
        match self.scenario {
            Scenario::S0 => vec![],
            Scenario::S3 => vec![t / 2],
            Scenario::S1 | Scenario::S2 => match self.spacing {
                Spacing::Equal => vec![t / 4, t / 2, 3 * t / 4],
                Spacing::Unequal => vec![t / 4, t / 2, 5 * t / 8],
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_dims(&self.dims)?;
        if self.ranks.len() != self.dims.len() {
            return Err(Error::InvalidConfig(format!(
                "{} ranks for an order-{} tensor",
                self.ranks.len(),
                self.dims.len()
            )));
        }
        if self.ranks.iter().zip(&self.dims).any(|(&r, &p)| r == 0 || r > p) {
            return Err(Error::InvalidConfig(format!(
                "ranks {:?} incompatible with dims {:?}",
                self.ranks, self.dims
            )));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::InvalidConfig(format!("rho = {} must lie in (-1, 1)", self.rho)));
        }
        if self.scenario != Scenario::S0 && (self.dims.len() != 3 || self.ranks != [3, 3, 3]) {
            return Err(Error::InvalidConfig(format!(
                "scenario {} needs an order-3 tensor with ranks (3, 3, 3)",
                self.scenario
            )));
        }
        let locs = self.locations();
        let mut prev = 0;
        for &l in &locs {
            if l <= prev {
                return Err(Error::InvalidConfig(format!(
                    "T = {} too short for the change locations of {}",
                    self.t, self.scenario
                )));
            }
            prev = l;
        }
        if self.t == 0 || (!locs.is_empty() && prev >= self.t) {
            return Err(Error::InvalidConfig(format!("T = {} is too short", self.t)));
        }
        Ok(())
    }

    /// Parses `key=value` lines: scenario, T, dims, ranks, rho, spacing,
    /// missing, seed, stream. Lists are comma separated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut scenario = None;
        let mut t = None;
        let mut dims: Option<Vec<usize>> = None;
        let mut ranks: Option<Vec<usize>> = None;
        let mut rest = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let bad = |what: &str| Error::Parse(format!("line {}: invalid {what} `{v}`", n + 1));
            match k {
                "scenario" => scenario = Some(v.parse()?),
                "T" | "t" => t = Some(v.parse().map_err(|_| bad("T"))?),
                "dims" => dims = Some(parse_list(v).ok_or_else(|| bad("dims"))?),
                "ranks" => ranks = Some(parse_list(v).ok_or_else(|| bad("ranks"))?),
                "rho" | "spacing" | "missing" | "seed" | "stream" => rest.push((n, k, v)),
                other => {
                    return Err(Error::Parse(format!("line {}: unknown key `{other}`", n + 1)))
                }
            }
        }
        let scenario = scenario.ok_or_else(|| Error::Parse("missing key `scenario`".into()))?;
        let t = t.ok_or_else(|| Error::Parse("missing key `T`".into()))?;
        let dims = dims.ok_or_else(|| Error::Parse("missing key `dims`".into()))?;
        let mut sc = SimScenario::new(scenario, t, dims);
        if let Some(r) = ranks {
            sc.ranks = r;
        }
        for (n, k, v) in rest {
            let bad = || Error::Parse(format!("line {}: invalid {k} `{v}`", n + 1));
            match k {
                "rho" => sc.rho = v.parse().map_err(|_| bad())?,
                "spacing" => sc.spacing = v.parse()?,
                "missing" => sc.missing = v.parse().map_err(|_| bad())?,
                "seed" => sc.seed = v.parse().map_err(|_| bad())?,
                _ => sc.stream = v.parse().map_err(|_| bad())?,
            }
        }
        Ok(sc)
    }

    pub fn to_config_string(&self) -> String {
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        format!(
            "scenario={}\nT={}\ndims={}\nranks={}\nrho={:?}\nspacing={}\nmissing={}\nseed={}\nstream={}\n",
            self.scenario,
            self.t,
            list(&self.dims),
            list(&self.ranks),
            self.rho,
            self.spacing,
            self.missing,
            self.seed,
            self.stream
        )
    }
}

pub(crate) fn parse_list(v: &str) -> Option<Vec<usize>> {
    v.split(|c| c == ',' || c == 'x')
        .map(|s| s.trim().parse().ok())
        .collect::<Option<Vec<_>>>()
        .filter(|l| !l.is_empty())
}

/// Population quantities behind a simulated series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub scenario: Scenario,
    pub t: usize,
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub locations: Vec<usize>,
    /// 0-based modes changing at each location.
    pub mode_sets: Vec<Vec<usize>>,
    /// `Λ_{1,k}`.
    pub base_loadings: Vec<Matrix>,
    /// `A_{j,k}`, indexed by change then mode.
    pub transforms: Vec<Vec<Matrix>>,
}

impl GroundTruth {
    pub fn q(&self) -> usize {
        self.locations.len()
    }

    /// Cumulative transform of mode `k` on segment `j` (0-based segments).
    pub fn segment_transform(&self, j: usize, k: usize) -> Matrix {
        let mut m = Matrix::identity(self.ranks[k]);
        for change in &self.transforms[..j] {
            m = m.matmul(&change[k]).expect("transforms are square");
        }
        m
    }

    /// `Λ_{j,k} = Λ_{1,k} A_{1,k} ⋯ A_{j−1,k}`.
    pub fn segment_loading(&self, j: usize, k: usize) -> Matrix {
        self.base_loadings[k]
            .matmul(&self.segment_transform(j, k))
            .expect("shapes agree")
    }

    /// Population mode-`k` factor covariance on segment `j` under unit
    /// factor variance: `Π_{ℓ≠k} ‖T_{j,ℓ}‖_F² · T_{j,k} T_{j,k}ᵀ`.
    pub fn factor_covariance(&self, j: usize, k: usize) -> SymMatrix {
        let ts: Vec<Matrix> = (0..self.ranks.len()).map(|l| self.segment_transform(j, l)).collect();
        let scale: f64 = ts
            .iter()
            .enumerate()
            .filter(|(l, _)| *l != k)
            .map(|(_, m)| m.frobenius_norm().powi(2))
            .product();
        ts[k].transpose().gram().scaled(scale)
    }
}

/// `(ω_j^{(k)}, ω_j)` for the change at index `j` (0-based).
pub fn size_of_change(truth: &GroundTruth, j: usize) -> Result<(Vec<f64>, f64)> {
    if j >= truth.q() {
        return Err(Error::InvalidConfig(format!("change {j} out of range")));
    }
    let per_mode: Vec<f64> = (0..truth.ranks.len())
        .map(|k| {
            truth
                .factor_covariance(j + 1, k)
                .sub(&truth.factor_covariance(j, k))
                .map(|d| d.frobenius_norm())
        })
        .collect::<Result<_>>()?;
    let total = per_mode.iter().map(|w| w * w).sum::<f64>().sqrt();
    Ok((per_mode, total))
}

/// Whether the change at index `j` is mode-`k` identifiable: the
/// trace-normalised population covariances differ by more than `tol`.
pub fn mode_identifiable(truth: &GroundTruth, j: usize, k: usize, tol: f64) -> bool {
    let a = truth.factor_covariance(j, k);
    let b = truth.factor_covariance(j + 1, k);
    let (ta, tb) = (a.trace(), b.trace());
    if !(ta > 0.0 && tb > 0.0) {
        return ta != tb;
    }
    b.scaled(1.0 / tb)
        .sub(&a.scaled(1.0 / ta))
        .map(|d| d.operator_norm() > tol)
        .unwrap_or(false)
}

/// A simulated series together with its factors and common component.
#[derive(Debug, Clone)]
pub struct Components {
    /// `F_t`, shape `ranks`.
    pub factors: TensorSeries,
    /// `F_t ×_1 Λ_{j,1} ⋯ ×_K Λ_{j,K}` on the segment containing `t`.
    pub common: TensorSeries,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn draw_truth(sc: &SimScenario, rng: &mut ChaCha8Rng) -> GroundTruth {
    let order = sc.dims.len();
    let base_loadings: Vec<Matrix> = sc
        .dims
        .iter()
        .zip(&sc.ranks)
        .map(|(&p, &r)| {
            let data = (0..p * r).map(|_| rng.random_range(-1.0..1.0)).collect();
            Matrix::new(p, r, data).expect("shape is consistent")
        })
        .collect();
    let locations = sc.locations();
    let identity = |k: usize| Matrix::identity(sc.ranks[k]);
    let mut transforms: Vec<Vec<Matrix>> =
        locations.iter().map(|_| (0..order).map(identity).collect()).collect();
    let mut mode_sets = vec![Vec::new(); locations.len()];
    match sc.scenario {
        Scenario::S0 => {}
        Scenario::S3 => {
            transforms[0][0] = Matrix::diagonal(&[1.0, 1.0, 0.0]);
            mode_sets[0] = vec![0];
        }
        Scenario::S1 | Scenario::S2 => {
            let (a21, a31, a32) = (normal(rng), normal(rng), normal(rng));
            transforms[0][0] =
                Matrix::from_rows(&[&[0.5, 0.0, 0.0], &[a21, 1.0, 0.0], &[a31, a32, 1.5]])
                    .expect("3x3");
            transforms[1][1] = Matrix::diagonal(&[1.0, 1.0, 0.0]);
            let sd = (1.0f64 / 3.0).sqrt();
            let a3: Vec<f64> = (0..9).map(|_| sd * normal(rng)).collect();
            transforms[2][2] = Matrix::new(3, 3, a3).expect("3x3");
            mode_sets = vec![vec![0], vec![1], vec![2]];
            if sc.scenario == Scenario::S2 {
                transforms[0][2] = Matrix::identity(3).scaled(3.0);
                transforms[2][1] = Matrix::diagonal(&[1.0, 0.6, 0.2]);
                mode_sets[2] = vec![1, 2];
            }
        }
    }
    GroundTruth {
        scenario: sc.scenario,
        t: sc.t,
        dims: sc.dims.clone(),
        ranks: sc.ranks.clone(),
        locations,
        mode_sets,
        base_loadings,
        transforms,
    }
}

fn simulate(sc: &SimScenario, keep_components: bool) -> Result<(TensorSeries, GroundTruth, Option<Components>)> {
    sc.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    rng.set_stream(sc.stream);
    let truth = draw_truth(sc, &mut rng);

    let order = sc.dims.len();
    let r: usize = sc.ranks.iter().product();
    let p: usize = sc.dims.iter().product();
    let t_len = sc.t;
    let innovation_sd = (1.0 - sc.rho * sc.rho).sqrt();

    let mut f: Vec<f64> = (0..r).map(|_| normal(&mut rng)).collect();
    for _ in 0..BURN_IN {
        for v in f.iter_mut() {
            *v = sc.rho * *v + innovation_sd * normal(&mut rng);
        }
    }

    let segments = truth.q() + 1;
    let loadings: Vec<Vec<Matrix>> = (0..segments)
        .map(|j| (0..order).map(|k| truth.segment_loading(j, k)).collect())
        .collect();

    let mut data = Vec::with_capacity(p * t_len);
    let mut factors = Vec::with_capacity(if keep_components { r * t_len } else { 0 });
    let mut common_all = Vec::with_capacity(if keep_components { p * t_len } else { 0 });
    let mut scratch = Vec::new();
    let mut segment = 0;
    for t in 0..t_len {
        for v in f.iter_mut() {
            *v = sc.rho * *v + innovation_sd * normal(&mut rng);
        }
        while segment < truth.q() && t >= truth.locations[segment] {
            segment += 1;
        }
        let ms: Vec<Option<&Matrix>> = loadings[segment].iter().map(Some).collect();
        let (common, _) = project_modes(&f, &sc.ranks, &ms, &mut scratch);
        data.extend(common.iter().map(|c| c + normal(&mut rng)));
        if keep_components {
            factors.extend_from_slice(&f);
            common_all.extend_from_slice(&common);
        }
    }

    let mut series = TensorSeries::new(sc.dims.clone(), t_len, data)?;
    if sc.missing {
        series = apply_missing(series);
    }
    let components = if keep_components {
        Some(Components {
            factors: TensorSeries::new(sc.ranks.clone(), t_len, factors)?,
            common: TensorSeries::new(sc.dims.clone(), t_len, common_all)?,
        })
    } else {
        None
    };
    Ok((series, truth, components))
}

/// Masks entries with `t > ⌊T/2⌋` and every index `i_k > ⌊p_k/2⌋`
/// (1-based), setting them to NaN.
fn apply_missing(series: TensorSeries) -> TensorSeries {
    let dims = series.dims().to_vec();
    let t_len = series.len();
    let p = series.obs_size();
    let mut mask = vec![true; p * t_len];
    let mut data = series.data().to_vec();
    let mut idx = vec![0usize; dims.len()];
    let mut hidden = vec![false; p];
    for h in hidden.iter_mut() {
        *h = idx.iter().zip(&dims).all(|(&i, &d)| i >= d / 2);
        for (i, &d) in idx.iter_mut().zip(&dims) {
            *i += 1;
            if *i < d {
                break;
            }
            *i = 0;
        }
    }
    for t in t_len / 2..t_len {
        for (e, &h) in hidden.iter().enumerate() {
            if h {
                mask[t * p + e] = false;
                data[t * p + e] = f64::NAN;
            }
        }
    }
    TensorSeries::new(dims, t_len, data)
        .and_then(|s| s.with_mask(mask))
        .expect("shape is unchanged")
}

/// Simulates one replication.
pub fn generate(sc: &SimScenario) -> Result<(TensorSeries, GroundTruth)> {
    simulate(sc, false).map(|(s, g, _)| (s, g))
}

/// As [`generate`], also returning factors and the common component.
pub fn generate_with_components(sc: &SimScenario) -> Result<(TensorSeries, GroundTruth, Components)> {
    simulate(sc, true).map(|(s, g, c)| (s, g, c.expect("components requested")))
}
