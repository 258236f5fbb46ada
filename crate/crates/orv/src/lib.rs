//! Scenario-driven verification of Liouville tail limits: config parsing,
//! file formats, report bundles, and the runner behind the `orv` binary.

pub mod config;
pub mod formats;
pub mod report;
pub mod runner;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub use config::{load_suite, parse_suite, LoadedSuite, Scenario, Suite};
pub use report::{strip_timestamp, ReportBundle, ScenarioResult};
pub use runner::run_suite;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum OrvError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] orv_core::Error),
}

impl OrvError {
    pub fn exit_code(&self) -> i32 {
        match self {
            OrvError::Config(_) => EXIT_CONFIG,
            _ => EXIT_FAIL,
        }
    }
}

/// Loads, runs, and writes a suite; returns the process exit code.
pub fn run(
    config_path: &Path,
    out: &Path,
    overrides: &[String],
    seed: Option<u64>,
    parallel: bool,
) -> Result<(i32, ReportBundle), OrvError> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| OrvError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let base_dir = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let loaded = parse_suite(&text, base_dir, overrides, seed)?;
    let bundle = run_suite(&loaded, &text, out, parallel)?;
    let code = if bundle.passed { EXIT_PASS } else { EXIT_FAIL };
    Ok((code, bundle))
}

/// Name, operation, and grid of each scenario, one row each.
pub fn list_scenarios(suite: &Suite) -> String {
    let rows: Vec<[String; 3]> = suite
        .scenarios
        .iter()
        .map(|s| {
            [
                s.name.clone(),
                s.operation.name().to_string(),
                s.operation.grid().map(|g| g.describe()).unwrap_or_else(|| "-".into()),
            ]
        })
        .collect();
    let header = ["NAME", "OPERATION", "GRID"];
    let mut widths = header.map(str::len);
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: [&str; 3]| {
        let _ = writeln!(
            out,
            "{:<w0$}  {:<w1$}  {}",
            cells[0],
            cells[1],
            cells[2],
            w0 = widths[0],
            w1 = widths[1]
        );
    };
    line(header);
    for r in &rows {
        line([&r[0], &r[1], &r[2]]);
    }
    out
}
