//! File formats.

pub mod report;
pub mod series;

pub use report::{truth_from_json, truth_to_json, ReportDocument};
pub use series::{load_series, read_binary, read_csv, save_series, write_binary, write_csv, SeriesFormat};

use std::path::Path;

use crate::error::{Error, Result};

/// Attaches the path to an I/O error.
pub(crate) fn with_path(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// `fs::read_to_string` whose errors name the file.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(with_path(path))
}
