//! JSON report and ground-truth documents. Modes are 1-based in files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::modeid::{loading_distance, zeta_scale, EndpointMode, ModeIdResult, ModeInformedLoadings};
use crate::pipeline::Analysis;
use crate::segmentation::ThresholdCoefficients;
use crate::sim::metrics::{evaluate_detection, evaluate_mode_id, Replication};
use crate::sim::{GroundTruth, Scenario};

pub const REPORT_FORMAT: &str = "tfmseg-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub t: usize,
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub ranks_estimated: bool,
    pub mu: f64,
    pub levels: u32,
    pub trim: usize,
    pub threshold: f64,
    pub coefficients: Option<ThresholdCoefficients>,
    pub coefficients_source: String,
    pub bandwidth: usize,
    pub d: usize,
    pub zeta: f64,
    pub zeta_multiplier: f64,
    pub endpoints: EndpointMode,
    pub weight: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointEntry {
    pub location: usize,
    pub detector: f64,
    pub interval: (usize, usize),
    pub level: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEntry {
    pub location: usize,
    /// 1-based.
    pub modes: Vec<usize>,
    pub xi_norms: Vec<f64>,
    /// `‖Ξ̂‖ / (T^{-1/2} + p^{-1})`.
    pub scaled_xi_norms: Vec<f64>,
    pub prev_segment: (usize, usize),
    pub next_segment: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// 1-based.
    pub mode: usize,
    pub start: usize,
    pub end: usize,
    pub pooled: bool,
    pub rank: usize,
    /// Distance to the true loading of each segment in the run.
    pub distances: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingSummary {
    pub segments: Vec<(usize, usize)>,
    pub segment_ranks: Vec<Vec<usize>>,
    pub runs: Vec<RunSummary>,
    /// Per segment, per mode distance of the segment-wise estimate.
    pub segment_wise_distances: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub format: String,
    pub version: u32,
    pub config: ResolvedConfig,
    pub change_points: Vec<ChangePointEntry>,
    pub mode_identification: Vec<ModeEntry>,
    pub loadings: Option<LoadingSummary>,
    pub timing: Option<Timing>,
}

impl ReportDocument {
    pub fn from_analysis(analysis: &Analysis, dims: &[usize], coefficients_source: &str) -> Self {
        let det = &analysis.detection;
        let t = det.stats.len();
        let p: usize = dims.iter().product();
        let config = ResolvedConfig {
            t,
            dims: dims.to_vec(),
            ranks: det.ranks.clone(),
            ranks_estimated: det.rank_estimate.is_some(),
            mu: det.intervals.mu,
            levels: det.intervals.finest_level,
            trim: det.params.trim,
            threshold: det.params.threshold,
            coefficients: det.params.coefficients,
            coefficients_source: coefficients_source.to_string(),
            bandwidth: det.bandwidth,
            d: det.stats.dim(),
            zeta: analysis.mode_id.zeta,
            zeta_multiplier: analysis.mode_id.zeta_multiplier,
            endpoints: analysis.mode_id.endpoint_mode,
            weight: det.params.weight.clone(),
        };
        let change_points = det
            .report
            .estimates
            .iter()
            .map(|e| ChangePointEntry {
                location: e.location,
                detector: e.detector,
                interval: (e.interval.start, e.interval.end),
                level: e.interval.level,
            })
            .collect();
        let mode_identification = mode_entries(&analysis.mode_id, t, p);
        let loadings = analysis.informed.as_ref().map(loading_summary);
        Self {
            format: REPORT_FORMAT.into(),
            version: REPORT_VERSION,
            config,
            change_points,
            mode_identification,
            loadings,
            timing: None,
        }
    }

    /// Fills loading distances against the truth when the number of
    /// estimated segments matches the number of true segments.
    pub fn attach_truth_distances(&mut self, informed: &ModeInformedLoadings, truth: &GroundTruth) {
        let Some(summary) = self.loadings.as_mut() else {
            return;
        };
        if informed.segments.len() != truth.q() + 1 {
            return;
        }
        let order = truth.ranks.len();
        let target = |j: usize, k: usize| nonzero_columns(&truth.segment_loading(j, k));
        for (run, out) in informed.runs.iter().flatten().zip(summary.runs.iter_mut()) {
            out.distances = (run.segments.0..run.segments.1)
                .map(|j| loading_distance(&run.loading, &target(j, run.mode)).ok())
                .collect();
        }
        summary.segment_wise_distances = informed
            .segment_wise
            .iter()
            .enumerate()
            .map(|(j, set)| {
                (0..order)
                    .map(|k| loading_distance(&set.loadings[k], &target(j, k)).ok())
                    .collect()
            })
            .collect();
    }

    pub fn locations(&self) -> Vec<usize> {
        self.change_points.iter().map(|c| c.location).collect()
    }

    /// Estimated mode sets, 0-based.
    pub fn mode_sets(&self) -> Vec<Vec<usize>> {
        self.mode_identification
            .iter()
            .map(|m| m.modes.iter().map(|k| k - 1).collect())
            .collect()
    }

    /// Serialisation with the timing block removed, for reproducibility checks.
    pub fn to_json_without_timing(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.timing = None;
        Ok(serde_json::to_string_pretty(&copy)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        if doc.format != REPORT_FORMAT {
            return Err(Error::Parse(format!("not a report document: format `{}`", doc.format)));
        }
        if doc.mode_identification.iter().flat_map(|m| &m.modes).any(|&k| k == 0) {
            return Err(Error::Parse("mode indices in reports are 1-based".into()));
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&super::read_text(path)?)
    }

    /// Scores this report against a ground truth.
    pub fn evaluate(&self, truth: &GroundTruth) -> Replication {
        let locations = self.locations();
        let detection = evaluate_detection(&locations, &truth.locations, truth.t);
        let mode_id = detection.all_detected.then(|| {
            self.mode_sets()
                .iter()
                .zip(&truth.mode_sets)
                .map(|(est, tr)| evaluate_mode_id(est, tr, truth.ranks.len()))
                .collect()
        });
        Replication { detection, mode_id }
    }
}

pub fn mode_entries(mode_id: &ModeIdResult, t: usize, p: usize) -> Vec<ModeEntry> {
    let scale = zeta_scale(t, p);
    mode_id
        .changes
        .iter()
        .map(|c| ModeEntry {
            location: c.location,
            modes: c.modes.iter().map(|k| k + 1).collect(),
            xi_norms: c.xi_norms(),
            scaled_xi_norms: c.xi_norms().iter().map(|x| x / scale).collect(),
            prev_segment: c.prev_segment,
            next_segment: c.next_segment,
        })
        .collect()
}

pub fn loading_summary(m: &ModeInformedLoadings) -> LoadingSummary {
    LoadingSummary {
        segments: m.segments.clone(),
        segment_ranks: m.segment_ranks.clone(),
        runs: m
            .runs
            .iter()
            .flatten()
            .map(|r| RunSummary {
                mode: r.mode + 1,
                start: r.start,
                end: r.end,
                pooled: r.pooled,
                rank: r.loading.cols(),
                distances: None,
            })
            .collect(),
        segment_wise_distances: None,
    }
}

/// Drops columns that are exactly zero, so rank-reducing transforms still
/// have a well-defined column space.
pub fn nonzero_columns(m: &Matrix) -> Matrix {
    let keep: Vec<usize> = (0..m.cols()).filter(|&j| m.column(j).iter().any(|&v| v != 0.0)).collect();
    let data = keep.iter().flat_map(|&j| m.column(j).iter().copied()).collect();
    Matrix::new(m.rows(), keep.len(), data).expect("columns have equal length")
}

/// Ground truth as stored on disk, with 1-based mode sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TruthDocument {
    format: String,
    scenario: Scenario,
    t: usize,
    dims: Vec<usize>,
    ranks: Vec<usize>,
    locations: Vec<usize>,
    mode_sets: Vec<Vec<usize>>,
    base_loadings: Vec<Matrix>,
    transforms: Vec<Vec<Matrix>>,
}

const TRUTH_FORMAT: &str = "tfmseg-truth";

pub fn truth_to_json(truth: &GroundTruth) -> Result<String> {
    let doc = TruthDocument {
        format: TRUTH_FORMAT.into(),
        scenario: truth.scenario,
        t: truth.t,
        dims: truth.dims.clone(),
        ranks: truth.ranks.clone(),
        locations: truth.locations.clone(),
        mode_sets: truth
            .mode_sets
            .iter()
            .map(|s| s.iter().map(|k| k + 1).collect())
            .collect(),
        base_loadings: truth.base_loadings.clone(),
        transforms: truth.transforms.clone(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn truth_from_json(text: &str) -> Result<GroundTruth> {
    let doc: TruthDocument = serde_json::from_str(text)?;
    if doc.format != TRUTH_FORMAT {
        return Err(Error::Parse(format!("not a truth document: format `{}`", doc.format)));
    }
    if doc.mode_sets.len() != doc.locations.len() {
        return Err(Error::Parse("one mode set per change point is required".into()));
    }
    let order = doc.dims.len();
    let mut mode_sets = Vec::with_capacity(doc.mode_sets.len());
    for set in &doc.mode_sets {
        let mut out = Vec::with_capacity(set.len());
        for &k in set {
            if k == 0 || k > order {
                return Err(Error::Parse(format!("mode {k} outside 1..={order}")));
            }
            out.push(k - 1);
        }
        mode_sets.push(out);
    }
    Ok(GroundTruth {
        scenario: doc.scenario,
        t: doc.t,
        dims: doc.dims,
        ranks: doc.ranks,
        locations: doc.locations,
        mode_sets,
        base_loadings: doc.base_loadings,
        transforms: doc.transforms,
    })
}
