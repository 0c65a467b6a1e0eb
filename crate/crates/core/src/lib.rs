//! Change point detection and mode identification for tensor factor models.

pub mod error;
pub mod factor;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod modeid;
pub mod pipeline;
pub mod segmentation;
pub mod series;
pub mod sim;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
pub use factor::{LoadingSet, Provenance, RankEstimate};
pub use matrix::{Matrix, SymMatrix};
pub use series::TensorSeries;
pub use stats::PseudoFactorStats;
pub use tensor::Tensor;
pub use segmentation::{
    detect, ChangePointReport, DetectConfig, Detection, SeededIntervalSet, ThresholdCoefficients,
};
pub use modeid::{identify_modes, EndpointMode, ModeIdConfig, ModeIdResult};
pub use pipeline::{analyze, Analysis, AnalyzeConfig};
pub use sim::{GroundTruth, Scenario, SimScenario, Spacing};
