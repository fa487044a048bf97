//! Event log file formats.

pub mod csv;
pub mod xes;

use std::path::Path;

use crate::error::{Error, Result};
use crate::log::EventLog;

/// Reads a log, choosing the format by file extension (`.xes` or `.csv`).
pub fn read_log(path: &Path, csv_options: &csv::CsvOptions) -> Result<EventLog> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("xes") => xes::read_xes(path),
        Some("csv") => csv::read_csv(path, csv_options),
        _ => Err(Error::config(format!(
            "cannot tell the log format of {}; expected a .csv or .xes extension",
            path.display()
        ))),
    }
}
