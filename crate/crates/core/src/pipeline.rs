//! Detection, mode identification and optional mode-informed loadings in
//! one call.

use crate::error::Result;
use crate::modeid::{identify_modes, mode_informed_loadings, ModeIdConfig, ModeIdResult, ModeInformedLoadings};
use crate::segmentation::{detect, DetectConfig, Detection};
use crate::series::TensorSeries;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalyzeConfig {
    pub detect: DetectConfig,
    pub mode_id: ModeIdConfig,
    pub mode_informed: bool,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub detection: Detection,
    pub mode_id: ModeIdResult,
    pub informed: Option<ModeInformedLoadings>,
}

pub fn analyze(series: &TensorSeries, cfg: &AnalyzeConfig) -> Result<Analysis> {
    let detection = detect(series, &cfg.detect)?;
    let locations = detection.report.locations();
    let mode_id = identify_modes(
        &detection.stats,
        &locations,
        &detection.intervals.finer,
        series.obs_size(),
        &cfg.mode_id,
    )?;
    let informed = if cfg.mode_informed {
        Some(mode_informed_loadings(
            series,
            &locations,
            &mode_id.mode_sets(),
            &detection.ranks,
        )?)
    } else {
        None
    };
    Ok(Analysis {
        detection,
        mode_id,
        informed,
    })
}
