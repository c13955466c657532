pub mod data;
pub mod eval;
pub mod merge;
pub mod parity;

use std::path::Path;

use serde_json::Value;

use crate::error::CliError;

/// Result of a subcommand: the JSON summary for stdout, a human report, and
/// an error to exit with after both are emitted (partial success).
#[derive(Debug)]
pub struct Outcome {
    pub summary: Value,
    pub report: String,
    pub failure: Option<CliError>,
}

impl Outcome {
    pub fn ok(summary: Value, report: impl Into<String>) -> Self {
        Self { summary, report: report.into(), failure: None }
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    ggez_core::io::write_atomic(path, text.as_bytes())
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("summary serializes")
}
