//! Detection and mode-identification metrics over replications.

use serde::{Deserialize, Serialize};

/// Per-replication detection outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    /// Whether some estimate lies within `2 ln T` of each true change.
    pub accurate: Vec<bool>,
    /// `q̂ − q`.
    pub q_diff: i64,
    /// `q̂ = q` and the `j`-th estimate falls between the midpoints around `θ_j`.
    pub all_detected: bool,
}

pub fn evaluate_detection(estimates: &[usize], truth: &[usize], t: usize) -> DetectionMetrics {
    let radius = 2.0 * (t as f64).ln();
    let accurate = truth
        .iter()
        .map(|&theta| {
            estimates
                .iter()
                .any(|&e| (e as f64 - theta as f64).abs() <= radius)
        })
        .collect();
    let q_diff = estimates.len() as i64 - truth.len() as i64;
    let all_detected = q_diff == 0
        && estimates.iter().enumerate().all(|(j, &e)| {
            let prev = if j == 0 { 0 } else { truth[j - 1] };
            let next = truth.get(j + 1).copied().unwrap_or(t);
            // (θ_{j−1} + θ_j)/2 < θ̂_j ≤ (θ_j + θ_{j+1})/2, doubled to stay integral
            2 * e > prev + truth[j] && 2 * e <= truth[j] + next
        });
    DetectionMetrics {
        accurate,
        q_diff,
        all_detected,
    }
}

/// `(TPR, FPR)` for one change with `order` modes in total.
pub fn evaluate_mode_id(estimated: &[usize], truth: &[usize], order: usize) -> (f64, f64) {
    let hits = estimated.iter().filter(|k| truth.contains(k)).count();
    let false_pos = estimated.len() - hits;
    let tpr = hits as f64 / truth.len().max(1) as f64;
    let fpr = false_pos as f64 / order.saturating_sub(truth.len()).max(1) as f64;
    (tpr, fpr)
}

/// One replication's contribution to a [`Summary`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub detection: DetectionMetrics,
    /// Per true change `(TPR, FPR)`, present only when every change was detected.
    pub mode_id: Option<Vec<(f64, f64)>>,
}

/// Aggregates over replications, in the layout of the usual results tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub replications: usize,
    /// Shares of `q̂ − q` in `≤ −2, −1, 0, 1, ≥ 2`.
    pub q_diff_bins: [f64; 5],
    pub accuracy: Vec<f64>,
    /// Number of replications in which every change was detected.
    pub detected: usize,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
}

pub fn summarize(reps: &[Replication]) -> Summary {
    let n = reps.len().max(1) as f64;
    let mut bins = [0.0; 5];
    let q = reps.first().map_or(0, |r| r.detection.accurate.len());
    let mut accuracy = vec![0.0; q];
    let mut tpr = vec![0.0; q];
    let mut fpr = vec![0.0; q];
    let mut detected = 0;
    for r in reps {
        let bin = (r.detection.q_diff.clamp(-2, 2) + 2) as usize;
        bins[bin] += 1.0 / n;
        for (a, &hit) in accuracy.iter_mut().zip(&r.detection.accurate) {
            if hit {
                *a += 1.0 / n;
            }
        }
        if let (true, Some(m)) = (r.detection.all_detected, &r.mode_id) {
            detected += 1;
            for (j, &(tp, fp)) in m.iter().enumerate() {
                tpr[j] += tp;
                fpr[j] += fp;
            }
        }
    }
    if detected > 0 {
        for v in tpr.iter_mut().chain(fpr.iter_mut()) {
            *v /= detected as f64;
        }
    } else {
        tpr.iter_mut().chain(fpr.iter_mut()).for_each(|v| *v = f64::NAN);
    }
    Summary {
        replications: reps.len(),
        q_diff_bins: bins,
        accuracy,
        detected,
        tpr,
        fpr,
    }
}

impl Summary {
    /// Share of replications with `q̂ = q`.
    pub fn exact_count_rate(&self) -> f64 {
        self.q_diff_bins[2]
    }

    /// CSV with a header row and one data row.
    pub fn to_csv(&self) -> crate::error::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = ["reps", "qdiff_le_-2", "qdiff_-1", "qdiff_0", "qdiff_1", "qdiff_ge_2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let q = self.accuracy.len();
        header.extend((1..=q).map(|j| format!("accuracy_{j}")));
        header.push("detected".into());
        header.extend((1..=q).map(|j| format!("tpr_{j}")));
        header.extend((1..=q).map(|j| format!("fpr_{j}")));
        w.write_record(&header)?;
        let mut row = vec![self.replications.to_string()];
        row.extend(self.q_diff_bins.iter().map(|v| format!("{v:.4}")));
        row.extend(self.accuracy.iter().map(|v| format!("{v:.4}")));
        row.push(self.detected.to_string());
        row.extend(self.tpr.iter().chain(&self.fpr).map(|v| format!("{v:.4}")));
        w.write_record(&row)?;
        let bytes = w
            .into_inner()
            .map_err(|e| crate::error::Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
