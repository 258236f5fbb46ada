//! Serializable report bundle. Everything except `metadata.timestamp` is a
//! pure function of the config, overrides, and seed.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use orv_core::regvar::{ConvergenceReport, TailIndexEstimate};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::Scenario;
use crate::OrvError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSummary {
    pub index: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub points: usize,
}

impl From<&TailIndexEstimate> for IndexSummary {
    fn from(e: &TailIndexEstimate) -> Self {
        IndexSummary {
            index: e.index,
            stderr: e.stderr,
            intercept: e.intercept,
            grid_lo: e.grid.first().copied().unwrap_or(f64::NAN),
            grid_hi: e.grid.last().copied().unwrap_or(f64::NAN),
            points: e.grid.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub t_grid: Vec<f64>,
    pub ratios: Vec<f64>,
    pub targets: Vec<f64>,
    pub limit: f64,
    pub rel_errors: Vec<f64>,
    pub max_rel_error: f64,
    pub final_rel_error: f64,
    pub tolerance: f64,
    pub monotone_tail: bool,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub std_errors: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub slope: Option<IndexSummary>,
    pub diagnostics: Vec<String>,
}

impl From<&ConvergenceReport> for CurveSummary {
    fn from(r: &ConvergenceReport) -> Self {
        CurveSummary {
            t_grid: r.t_grid.clone(),
            ratios: r.ratios.clone(),
            targets: r.targets.clone(),
            limit: r.limit,
            rel_errors: r.rel_errors.clone(),
            max_rel_error: r.max_rel_error,
            final_rel_error: r.final_rel_error,
            tolerance: r.tolerance,
            monotone_tail: r.monotone_tail,
            passed: r.passed,
            std_errors: r.std_errors.clone(),
            slope: r.slope.as_ref().map(IndexSummary::from),
            diagnostics: r.diagnostics.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub name: String,
    pub operation: String,
    pub seed: u64,
    /// Outcome of the check itself, before `expect_failure` is applied.
    pub verified: bool,
    pub expect_failure: bool,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    /// Files written next to `report.json`.
    pub files: Vec<String>,
    pub payload: Value,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub errored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    /// Seconds since the Unix epoch; the only nondeterministic field.
    pub timestamp: u64,
    pub orv_version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportBundle {
    pub suite: Option<String>,
    pub passed: bool,
    pub summary: Summary,
    pub metadata: Metadata,
    pub scenarios: Vec<ScenarioResult>,
}

impl ReportBundle {
    pub fn new(
        suite: Option<String>,
        scenarios: Vec<ScenarioResult>,
        seed: u64,
        config_sha256: String,
        overrides: Vec<String>,
    ) -> Self {
        let passed_count = scenarios.iter().filter(|s| s.passed).count();
        let errored = scenarios.iter().filter(|s| s.error.is_some()).count();
        ReportBundle {
            suite,
            passed: passed_count == scenarios.len(),
            summary: Summary {
                total: scenarios.len(),
                passed: passed_count,
                failed: scenarios.len() - passed_count,
                errored,
            },
            metadata: Metadata {
                timestamp: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
                orv_version: env!("CARGO_PKG_VERSION").to_string(),
                seed,
                config_sha256,
                overrides,
            },
            scenarios,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), OrvError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

/// Parses a report and blanks the timestamp, for determinism comparisons.
pub fn strip_timestamp(report_json: &str) -> Result<Value, OrvError> {
    let mut v: Value = serde_json::from_str(report_json)?;
    if let Some(meta) = v.get_mut("metadata").and_then(Value::as_object_mut) {
        meta.remove("timestamp");
    }
    Ok(v)
}
