//! Seeded intervals, CUSUM detector, threshold and the segmentation loop.

pub mod cusum;
pub mod detect;
pub mod intervals;
pub mod threshold;
pub mod tfmseg;

pub use cusum::{bartlett_bandwidth, cusum, detector, weight_matrix};
pub use detect::{detect, DetectConfig, Detection, ThresholdSpec};
pub use intervals::{default_mu, default_trim, generate_seeded_intervals, SeededInterval, SeededIntervalSet};
pub use threshold::{threshold_pi, ThresholdCoefficients, DEFAULT_COEFFICIENTS};
pub use tfmseg::{tfmseg, ChangePointEstimate, ChangePointReport, DetectorParams};
