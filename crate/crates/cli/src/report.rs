//! Report records and file output.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

/// Numbers in CSV files carry 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| num(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    /// Seconds; `null` unless timings are enabled.
    pub runtime: Option<f64>,
    /// Error text when the check could not be evaluated.
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
}

/// Collects check records, timing them when asked.
pub struct Checks {
    timed: bool,
    pub records: Vec<CheckRecord>,
}

/// Outcome of one check: measured value, target and tolerance, and whether
/// `measured` is within `tolerance` of `target` (or another rule decided by
/// the check itself).
pub struct Measured {
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Measured {
    pub fn within(measured: f64, target: f64, tolerance: f64) -> Self {
        Self {
            measured,
            target,
            tolerance,
            pass: (measured - target).abs() <= tolerance,
        }
    }
}

impl Checks {
    pub fn new(timed: bool) -> Self {
        Self {
            timed,
            records: Vec::new(),
        }
    }

    pub fn run<F>(&mut self, name: &str, f: F)
    where
        F: FnOnce() -> std::result::Result<Measured, freestream::Error>,
    {
        let start = Instant::now();
        let outcome = f();
        let runtime = self.timed.then(|| start.elapsed().as_secs_f64());
        let record = match outcome {
            Ok(m) => CheckRecord {
                name: name.to_string(),
                pass: m.pass,
                measured: m.measured,
                target: m.target,
                tolerance: m.tolerance,
                runtime,
                note: None,
            },
            Err(e) => CheckRecord {
                name: name.to_string(),
                pass: false,
                measured: f64::NAN,
                target: f64::NAN,
                tolerance: f64::NAN,
                runtime,
                note: Some(e.to_string()),
            },
        };
        self.records.push(record);
    }
}
