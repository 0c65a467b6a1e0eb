use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mode {mode} out of range for an order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("series contains missing observations; fill them before estimation")]
    UnsupportedMissing,

    #[error("empty interval ({start}, {end}]")]
    EmptyInterval { start: usize, end: usize },

    #[error("series too short: {0}")]
    SeriesTooShort(String),

    #[error("invalid rank: {0}")]
    InvalidRank(String),

    #[error("matrix is rank deficient")]
    RankDeficient,

    #[error("degenerate segment ({start}, {end}]: {reason}")]
    DegenerateSegment {
        start: usize,
        end: usize,
        reason: String,
    },

    #[error("segment ({start}, {end}] has fewer than 2 observations")]
    SegmentTooShort { start: usize, end: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable category, used by the command line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::UnsupportedMissing => "unsupported-missing",
            Error::Io(_) => "io",
            Error::Parse(_) | Error::Json(_) | Error::Csv(_) => "parse",
            Error::RankDeficient
            | Error::DegenerateSegment { .. }
            | Error::SegmentTooShort { .. }
            | Error::Calibration(_) => "numerical",
            Error::InvalidConfig(_) => "config",
            Error::ModeOutOfRange { .. }
            | Error::DimensionMismatch(_)
            | Error::InvalidShape(_)
            | Error::EmptyInterval { .. }
            | Error::SeriesTooShort(_)
            | Error::InvalidRank(_) => "invalid-input",
        }
    }
}
