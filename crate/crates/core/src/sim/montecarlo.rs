//! Reproducible parallel replication driver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modeid::{identify_modes, ModeIdConfig, ModeIdResult};
use crate::segmentation::{detect, ChangePointReport, DetectConfig};
use crate::sim::metrics::{evaluate_detection, evaluate_mode_id, Replication};
use crate::sim::{generate, SimScenario};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "TFMSEG_THREADS";

/// Worker count from `TFMSEG_THREADS`, else the available parallelism.
pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `f(0), …, f(reps − 1)` on a bounded pool; results keep index order.
pub fn run_replications<T, F>(reps: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(|| (0..reps as u64).into_par_iter().map(&f).collect()))
}

/// Everything one simulated replication produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationOutcome {
    pub stream: u64,
    pub report: ChangePointReport,
    pub mode_id: ModeIdResult,
    pub metrics: Replication,
}

/// Simulates, detects, identifies modes and scores one replication.
pub fn evaluate_replication(
    scenario: &SimScenario,
    stream: u64,
    detect_cfg: &DetectConfig,
    mode_cfg: &ModeIdConfig,
) -> Result<ReplicationOutcome> {
    let sc = scenario.clone().with_seed(scenario.seed, stream);
    let (series, truth) = generate(&sc)?;
    let det = detect(&series, detect_cfg)?;
    let locations = det.report.locations();
    let mode_id = identify_modes(
        &det.stats,
        &locations,
        &det.intervals.finer,
        series.obs_size(),
        mode_cfg,
    )?;
    let detection = evaluate_detection(&locations, &truth.locations, sc.t);
    let mode_rates = detection.all_detected.then(|| {
        mode_id
            .changes
            .iter()
            .zip(&truth.mode_sets)
            .map(|(c, k)| evaluate_mode_id(&c.modes, k, truth.ranks.len()))
            .collect()
    });
    Ok(ReplicationOutcome {
        stream,
        report: det.report,
        mode_id,
        metrics: Replication {
            detection,
            mode_id: mode_rates,
        },
    })
}

/// [`evaluate_replication`] for streams `0..reps`.
pub fn evaluate_scenario(
    scenario: &SimScenario,
    reps: usize,
    detect_cfg: &DetectConfig,
    mode_cfg: &ModeIdConfig,
) -> Result<Vec<ReplicationOutcome>> {
    run_replications(reps, |stream| {
        evaluate_replication(scenario, stream, detect_cfg, mode_cfg)
    })?
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replications_keep_order() {
        let v = run_replications(50, |i| i * i).unwrap();
        assert_eq!(v, (0..50u64).map(|i| i * i).collect::<Vec<_>>());
    }
}
