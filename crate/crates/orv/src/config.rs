//! Scenario files: a JSON suite holding an array of scenarios, each naming a
//! model, an optional scaling spec, one operation with its parameters, and
//! tolerances. Overrides (`--set a.b.c=value`) are applied to the raw JSON
//! before it is validated.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use orv_core::driving::DrivingFunction;
use orv_core::liouville::LiouvilleModel;
use orv_core::regvar::{default_grid, geometric_grid, BoxRegion, ScalingSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::formats::load_tabulated_csv;
use crate::OrvError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub scenarios: Vec<Scenario>,
}

// flatten and deny_unknown_fields do not combine in serde
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub model: ModelConfig,
    #[serde(default)]
    pub scaling: Option<ScalingConfig>,
    #[serde(flatten)]
    pub operation: Operation,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Negative controls: the scenario passes when verification fails.
    #[serde(default)]
    pub expect_failure: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub shapes: Vec<f64>,
    pub driving: DrivingConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DrivingConfig {
    InvertedDirichlet { beta: f64 },
    ParetoLog { beta: f64, delta: f64 },
    Exponential { rate: f64 },
    /// Knots inline or from a two-column CSV (`t,g`) relative to the config.
    Tabulated {
        #[serde(default)]
        points: Option<Vec<(f64, f64)>>,
        #[serde(default)]
        path: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub exponents: Vec<f64>,
    /// Hypothesized tail index for drivers without a declared one.
    #[serde(default)]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    Values(Vec<f64>),
    Geometric {
        lo: f64,
        hi: f64,
        #[serde(default = "default_per_decade")]
        per_decade: usize,
    },
}

fn default_per_decade() -> usize {
    12
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub lower: Vec<f64>,
    /// `null` entries (or a missing array) mean `+∞`.
    #[serde(default)]
    pub upper: Option<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "operation", content = "params", rename_all = "kebab-case")]
pub enum Operation {
    Sample(SampleParams),
    Density(DensityParams),
    VerifyDensityRatio(DensityRatioParams),
    VerifyTailProb(TailProbParams),
    VerifyScaling(ScalingParams),
    VerifyWeyl(WeylParams),
    VerifyConditional(ConditionalParams),
    EstimateIndex(EstimateParams),
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Sample(_) => "sample",
            Operation::Density(_) => "density",
            Operation::VerifyDensityRatio(_) => "verify-density-ratio",
            Operation::VerifyTailProb(_) => "verify-tail-prob",
            Operation::VerifyScaling(_) => "verify-scaling",
            Operation::VerifyWeyl(_) => "verify-weyl",
            Operation::VerifyConditional(_) => "verify-conditional",
            Operation::EstimateIndex(_) => "estimate-index",
        }
    }

    /// The scale grid, when the operation has one.
    pub fn grid(&self) -> Option<&GridConfig> {
        match self {
            Operation::VerifyDensityRatio(p) => p.grid.as_ref(),
            Operation::VerifyTailProb(p) => Some(&p.grid),
            Operation::VerifyScaling(p) => Some(&p.grid),
            Operation::VerifyWeyl(p) => p.grid.as_ref(),
            Operation::VerifyConditional(p) => p.grid.as_ref(),
            Operation::EstimateIndex(p) => p.grid.as_ref(),
            Operation::Sample(_) | Operation::Density(_) => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleParams {
    pub n: usize,
    #[serde(default = "yes")]
    pub write_samples: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityParams {
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub expected: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityRatioParams {
    pub x: Vec<f64>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailProbParams {
    pub region: RegionConfig,
    pub grid: GridConfig,
    pub samples: usize,
    #[serde(default = "three")]
    pub sigmas: f64,
    /// Analytic value to compare against instead of the computed `μ(B)`.
    #[serde(default)]
    pub target: Option<f64>,
}

fn three() -> f64 {
    3.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingParams {
    pub region: RegionConfig,
    pub grid: GridConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeylParams {
    pub order: f64,
    /// Points where closed form and quadrature are compared.
    #[serde(default)]
    pub points: Vec<f64>,
    /// Grid for the log-log slope and the Karamata ratio curve.
    #[serde(default)]
    pub grid: Option<GridConfig>,
    /// Scale at which `W^α g(t) / (t^α g(t))` is compared to its limit.
    pub t_limit: f64,
    #[serde(default = "closed_form_tol")]
    pub closed_form_tol: f64,
    #[serde(default = "slope_tol")]
    pub slope_tol: f64,
}

fn closed_form_tol() -> f64 {
    1e-6
}

fn slope_tol() -> f64 {
    0.02
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ConditionalKind {
    Moment { j: Vec<u32> },
    HExpectation { h: DrivingConfig },
    Tail { x_fixed: Vec<f64>, region: RegionConfig },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionalParams {
    pub r: usize,
    #[serde(flatten)]
    pub kind: ConditionalKind,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default = "slope_tol")]
    pub slope_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "kebab-case")]
pub enum IndexTarget {
    ScaleFunction,
    Driving,
    Weyl { order: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateParams {
    #[serde(flatten)]
    pub target: IndexTarget,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    /// Declared index to compare with; derived from the model when absent.
    #[serde(default)]
    pub expected: Option<f64>,
}

/// A parsed suite together with where it came from and how it was altered.
#[derive(Debug, Clone)]
pub struct LoadedSuite {
    pub suite: Suite,
    pub base_dir: PathBuf,
    pub overrides: Vec<String>,
}

/// Reads, overrides, parses, and validates a suite file.
pub fn load_suite(path: &Path, overrides: &[String], seed: Option<u64>) -> Result<LoadedSuite, OrvError> {
    let text = fs::read_to_string(path)
        .map_err(|e| OrvError::Config(format!("cannot read {}: {e}", path.display())))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_suite(&text, base_dir, overrides, seed)
}

pub fn parse_suite(
    text: &str,
    base_dir: PathBuf,
    overrides: &[String],
    seed: Option<u64>,
) -> Result<LoadedSuite, OrvError> {
    let mut raw: Value = serde_json::from_str(text)
        .map_err(|e| OrvError::Config(format!("malformed JSON: {e}")))?;
    let mut applied = Vec::with_capacity(overrides.len() + 1);
    for o in overrides {
        apply_override(&mut raw, o)?;
        applied.push(o.clone());
    }
    if let Some(s) = seed {
        let o = format!("seed={s}");
        apply_override(&mut raw, &o)?;
        applied.push(o);
    }
    let suite: Suite = serde_path_error(raw)?;
    let mut seen = HashSet::new();
    for s in &suite.scenarios {
        if !seen.insert(s.name.as_str()) {
            return Err(OrvError::Config(format!("duplicate scenario name `{}`", s.name)));
        }
        if s.name.is_empty() || s.name.contains(['/', '\\']) {
            return Err(OrvError::Config(format!(
                "scenario name `{}` must be non-empty and usable as a file name",
                s.name
            )));
        }
    }
    Ok(LoadedSuite {
        suite,
        base_dir,
        overrides: applied,
    })
}

fn serde_path_error(raw: Value) -> Result<Suite, OrvError> {
    // Re-serialize so serde_json reports line and column of the bad field.
    let pretty = serde_json::to_string_pretty(&raw).expect("value serializes");
    serde_json::from_str(&pretty).map_err(|e| {
        let line = pretty.lines().nth(e.line().saturating_sub(1)).unwrap_or("").trim();
        OrvError::Config(format!("invalid config: {e} (near `{line}`)"))
    })
}

/// `a.b.0.c=value`: value is parsed as JSON, falling back to a string.
/// Array elements can also be addressed by their `name` field.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<(), OrvError> {
    let (path, value) = spec
        .split_once('=')
        .ok_or_else(|| OrvError::Config(format!("override `{spec}` is not key=value")))?;
    let value: Value =
        serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(OrvError::Config(format!("override `{spec}` has an empty key")));
    }
    let mut node = root;
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert((*key).to_string(), value);
                    return Ok(());
                }
                map.entry((*key).to_string())
                    .or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx = match key.parse::<usize>() {
                    Ok(idx) => idx,
                    Err(_) => items
                        .iter()
                        .position(|v| v.get("name").and_then(Value::as_str) == Some(key))
                        .ok_or_else(|| {
                            OrvError::Config(format!("override `{spec}`: no element named `{key}`"))
                        })?,
                };
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| {
                    OrvError::Config(format!("override `{spec}`: index {idx} out of range ({len})"))
                })?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => {
                return Err(OrvError::Config(format!(
                    "override `{spec}`: `{key}` is not inside an object or array"
                )))
            }
        };
    }
    unreachable!("loop returns on the last key")
}

impl DrivingConfig {
    pub fn build(&self, base_dir: &Path) -> Result<DrivingFunction, OrvError> {
        let g = match self {
            DrivingConfig::InvertedDirichlet { beta } => DrivingFunction::inverted_dirichlet(*beta),
            DrivingConfig::ParetoLog { beta, delta } => DrivingFunction::pareto_log(*beta, *delta),
            DrivingConfig::Exponential { rate } => DrivingFunction::exponential(*rate),
            DrivingConfig::Tabulated { points, path } => {
                let knots = match (points, path) {
                    (Some(p), None) => p.clone(),
                    (None, Some(p)) => load_tabulated_csv(&base_dir.join(p))?,
                    _ => {
                        return Err(OrvError::Config(
                            "tabulated driving needs exactly one of `points` or `path`".into(),
                        ))
                    }
                };
                DrivingFunction::tabulated(&knots)
            }
        };
        g.map_err(|e| OrvError::Config(format!("driving: {e}")))
    }
}

impl ModelConfig {
    pub fn build(&self, base_dir: &Path) -> Result<LiouvilleModel, OrvError> {
        let g = self.driving.build(base_dir)?;
        LiouvilleModel::normalize(self.shapes.clone(), g)
            .map_err(|e| OrvError::Config(format!("model: {e}")))
    }
}

impl Scenario {
    /// Scaling spec; isotropic when the scenario names none.
    pub fn scaling_spec(&self, m: &LiouvilleModel) -> Result<ScalingSpec, OrvError> {
        let spec = match &self.scaling {
            None => ScalingSpec::isotropic(m),
            Some(ScalingConfig { exponents, beta: None }) => ScalingSpec::new(m, exponents.clone()),
            Some(ScalingConfig { exponents, beta: Some(b) }) => {
                ScalingSpec::with_beta(m, exponents.clone(), *b)
            }
        };
        spec.map_err(|e| OrvError::Config(format!("scenario `{}`: scaling: {e}", self.name)))
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<Vec<f64>, OrvError> {
        match self {
            GridConfig::Values(v) => Ok(v.clone()),
            GridConfig::Geometric { lo, hi, per_decade } => geometric_grid(*lo, *hi, *per_decade)
                .map_err(|e| OrvError::Config(format!("grid: {e}"))),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            GridConfig::Values(v) => match (v.first(), v.last()) {
                (Some(a), Some(b)) => format!("{} pts [{a:e}, {b:e}]", v.len()),
                _ => "empty".into(),
            },
            GridConfig::Geometric { lo, hi, per_decade } => {
                format!("[{lo:e}, {hi:e}] × {per_decade}/decade")
            }
        }
    }
}

pub fn grid_or_default(grid: Option<&GridConfig>) -> Result<Vec<f64>, OrvError> {
    grid.map(GridConfig::build).unwrap_or_else(|| Ok(default_grid()))
}

impl RegionConfig {
    pub fn build(&self) -> Result<BoxRegion, OrvError> {
        let upper = match &self.upper {
            None => vec![f64::INFINITY; self.lower.len()],
            Some(u) => u.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect(),
        };
        BoxRegion::new(self.lower.clone(), upper).map_err(|e| OrvError::Config(format!("region: {e}")))
    }
}
