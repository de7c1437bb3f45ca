//! Verification reports: one record per check, emitted as JSON or text.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{BtError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// An enumeration hit its cap; the check is incomplete.
    Capped,
    /// Reported without assertion.
    Exploratory,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub status: Status,
    pub witness: Option<String>,
    /// Milliseconds; 0 unless timings were requested.
    pub runtime_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub params: serde_json::Value,
    pub checks: Vec<CheckRecord>,
    pub seed: u64,
    pub version: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
}

impl Report {
    pub fn new(suite: &str, params: serde_json::Value, seed: u64) -> Report {
        Report { suite: suite.into(), params, checks: Vec::new(), seed, version: env!("CARGO_PKG_VERSION").into() }
    }

    /// Sorts records by name; the sort is stable.
    pub fn finish(&mut self) {
        self.checks.sort_by(|a, b| a.name.cmp(&b.name));
    }

    /// True iff no asserted check failed or was capped.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| matches!(c.status, Status::Pass | Status::Exploratory))
    }
}

pub fn emit_report(r: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => serde_json::to_string_pretty(r).map_err(|e| BtError::Config(e.to_string())),
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "# btlab {} suite={} seed={}", r.version, r.suite, r.seed);
            for c in &r.checks {
                let st = match c.status {
                    Status::Pass => "PASS",
                    Status::Fail => "FAIL",
                    Status::Capped => "CAPPED",
                    Status::Exploratory => "INFO",
                };
                let _ = write!(s, "{st} {} [{}]", c.name, c.anchor);
                if let Some(w) = &c.witness {
                    let _ = write!(s, " : {w}");
                }
                if c.runtime_ms > 0 {
                    let _ = write!(s, " ({} ms)", c.runtime_ms);
                }
                s.push('\n');
            }
            Ok(s)
        }
    }
}

pub fn parse_report(s: &str) -> Result<Report> {
    serde_json::from_str(s).map_err(|e| BtError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_valid_json() {
        let r = Report::new("tree", serde_json::json!({}), 0);
        let s = emit_report(&r, Format::Json).unwrap();
        assert_eq!(parse_report(&s).unwrap(), r);
    }
}
