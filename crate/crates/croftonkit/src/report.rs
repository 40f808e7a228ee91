//! JSON report envelopes and CSV tables.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything a run writes as JSON.
///
/// `results` and `config` depend only on the configuration and seed;
/// `timing` holds the wall-clock time and worker count, which do not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportEnvelope {
    pub tool_version: String,
    pub config: Value,
    pub body_hash: Option<String>,
    pub warnings: Vec<String>,
    pub results: Value,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub wall_time: f64,
    pub workers: usize,
}

impl ReportEnvelope {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Runtime(format!("malformed report: {e}")))
    }
}

/// Sets every `wall_time` field inside `value` to `seconds`.
pub fn stamp_wall_time(value: &mut Value, seconds: f64) {
    match value {
        Value::Object(map) => {
            for (key, v) in map.iter_mut() {
                if key == "wall_time" && v.is_number() {
                    *v = Value::from(seconds);
                } else {
                    stamp_wall_time(v, seconds);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(|v| stamp_wall_time(v, seconds)),
        _ => {}
    }
}

/// Removes every `wall_time` field, for comparing reports across runs.
pub fn strip_wall_time(value: &mut Value) {
    match value {
        Value::Object(map) => {
            map.remove("wall_time");
            map.values_mut().for_each(strip_wall_time);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_wall_time),
        _ => {}
    }
}

/// A header row plus data rows, written as CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push<S: ToString>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows.push(row.into_iter().map(|s| s.to_string()).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

/// Writes `text` to `path`, or to stdout when `path` is `-`.
pub fn write_output(path: &Path, text: &str) -> CliResult<()> {
    if path.as_os_str() == "-" {
        let mut out = std::io::stdout().lock();
        return out
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io { path: path.into(), source });
    }
    fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}
