//! Verification harness for operator regular variation of Liouville laws:
//! limit functions, intensity measures, convergence curves over geometric
//! scale grids, and log-log tail-index regression.

mod conditional;
mod limit;
mod rotate;
mod tail;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

pub use conditional::{conditional_tail_ratio, ConditionalTailReport};
pub use limit::{
    density_ratio, density_ratio_curve, isotropic_density_ratio, isotropic_limit_function,
    isotropic_scale_function_v, limit_function, limiting_measure, limiting_measure_estimate,
    ln_scale_function_v, scale_function_v, scaling_exponent_check, MeasureEstimate, MeasureMethod,
};
pub use rotate::rotate_density_check;
pub use tail::{tail_prob_ratio, TailProbExperiment, TailProbOptions, MIN_HITS};

use crate::error::{Error, Result};
use crate::liouville::LiouvilleModel;

/// Tolerance for membership in the argmax set `(α)`.
pub const ARGMAX_TOL: f64 = 1e-12;

/// Relative errors below this are treated as converged when checking
/// monotonicity, so rounding noise cannot break the check.
pub const MONOTONE_FLOOR: f64 = 1e-12;

/// Diagonal scaling `E = DIAG(α_1, …, α_d)` paired with a Liouville model.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSpec {
    exponents: Vec<f64>,
    alpha_max: f64,
    argmax_set: Vec<usize>,
    beta: f64,
    weighted_shape_sum: f64,
    rho: f64,
    hypothesized: bool,
}

impl ScalingSpec {
    /// Takes `β` from the model's driving function.
    pub fn new(m: &LiouvilleModel, exponents: Vec<f64>) -> Result<Self> {
        let beta = m.driving().tail_index()?;
        Self::build(m, exponents, beta, false)
    }

    /// `α = (1, …, 1)`.
    pub fn isotropic(m: &LiouvilleModel) -> Result<Self> {
        Self::new(m, alloc::vec![1.0; m.dim()])
    }

    /// Uses a hypothesized `β`, for drivers without a declared index
    /// (negative controls, tabulated data).
    pub fn with_beta(m: &LiouvilleModel, exponents: Vec<f64>, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::invalid("beta", format!("must be positive and finite, got {beta}")));
        }
        Self::build(m, exponents, beta, true)
    }

    fn build(m: &LiouvilleModel, exponents: Vec<f64>, beta: f64, hypothesized: bool) -> Result<Self> {
        if exponents.len() != m.dim() {
            return Err(Error::DimensionMismatch {
                expected: m.dim(),
                got: exponents.len(),
            });
        }
        if exponents.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::invalid("exponents", "must be positive and finite"));
        }
        let alpha_max = exponents.iter().copied().fold(f64::MIN, f64::max);
        let tol = ARGMAX_TOL * alpha_max.max(1.0);
        let argmax_set: Vec<usize> = (0..exponents.len())
            .filter(|&i| (exponents[i] - alpha_max).abs() <= tol)
            .collect();
        let weighted_shape_sum: f64 = exponents.iter().zip(m.shapes()).map(|(al, a)| al * a).sum();
        let rho = alpha_max * beta - weighted_shape_sum;
        if !(rho > 0.0) {
            return Err(Error::invalid(
                "exponents",
                format!("αβ − Σα_i a_i = {rho} must be positive"),
            ));
        }
        Ok(ScalingSpec {
            exponents,
            alpha_max,
            argmax_set,
            beta,
            weighted_shape_sum,
            rho,
            hypothesized,
        })
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn alpha_max(&self) -> f64 {
        self.alpha_max
    }

    /// `(α) = {i : α_i = max_k α_k}`, zero-based.
    pub fn argmax_set(&self) -> &[usize] {
        &self.argmax_set
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `Σ α_i a_i`.
    pub fn weighted_shape_sum(&self) -> f64 {
        self.weighted_shape_sum
    }

    /// `ρ = αβ − Σα_i a_i`; `V ∈ RV_{−ρ}`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `tr E = Σ α_i`.
    pub fn trace(&self) -> f64 {
        self.exponents.iter().sum()
    }

    pub fn is_hypothesized(&self) -> bool {
        self.hypothesized
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }
}

/// Axis-aligned box `∏ [lower_i, upper_i]`; upper bounds may be `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::invalid("region", "must have at least one coordinate"));
        }
        if lower.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::Divergent(
                "region must be bounded away from 0 (all lower bounds positive)".into(),
            ));
        }
        for (i, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if u.is_nan() || !(u > l) {
                return Err(Error::invalid(
                    "region",
                    format!("coordinate {i}: need lower < upper, got [{l}, {u}]"),
                ));
            }
        }
        Ok(BoxRegion { lower, upper })
    }

    /// `[lower, ∞)^d`.
    pub fn orthant_corner(lower: Vec<f64>) -> Result<Self> {
        let upper = alloc::vec![f64::INFINITY; lower.len()];
        Self::new(lower, upper)
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&l, &u))| v >= l && v <= u)
    }

    /// `t^E B` for diagonal `E`.
    pub fn scaled(&self, t: f64, exponents: &[f64]) -> BoxRegion {
        let factors: Vec<f64> = exponents.iter().map(|&a| libm::pow(t, a)).collect();
        BoxRegion {
            lower: self.lower.iter().zip(&factors).map(|(l, f)| l * f).collect(),
            upper: self.upper.iter().zip(&factors).map(|(u, f)| u * f).collect(),
        }
    }
}

/// `per_decade` points per factor of ten from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() || per_decade == 0 {
        return Err(Error::invalid(
            "grid",
            format!("need 0 < lo < hi < ∞ and per_decade ≥ 1, got [{lo}, {hi}] × {per_decade}"),
        ));
    }
    let decades = libm::log10(hi / lo);
    let steps = libm::round(decades * per_decade as f64).max(1.0) as usize;
    let mut grid: Vec<f64> = (0..=steps)
        .map(|k| lo * libm::pow(10.0, decades * k as f64 / steps as f64))
        .collect();
    grid[0] = lo;
    grid[steps] = hi;
    Ok(grid)
}

/// Twelve points per decade over `[10, 10⁶]`.
pub fn default_grid() -> Vec<f64> {
    geometric_grid(10.0, 1e6, 12).expect("static grid")
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("t_grid", "must be non-empty"));
    }
    if grid.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::invalid("t_grid", "scales must be positive and finite"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("t_grid", "must be strictly increasing"));
    }
    Ok(())
}

/// Empirical ratios against their analytic target over a grid of scales.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub t_grid: Vec<f64>,
    pub ratios: Vec<f64>,
    pub targets: Vec<f64>,
    /// Target at the largest scale.
    pub limit: f64,
    pub rel_errors: Vec<f64>,
    pub max_rel_error: f64,
    pub final_rel_error: f64,
    pub tolerance: f64,
    /// Relative errors are non-increasing over the last decade of the grid.
    pub monotone_tail: bool,
    pub passed: bool,
    /// Monte Carlo standard errors of `ratios`; empty for deterministic curves.
    pub std_errors: Vec<f64>,
    pub slope: Option<TailIndexEstimate>,
    pub diagnostics: Vec<String>,
}

impl ConvergenceReport {
    /// Builds the report and applies the default rule: the final relative
    /// error is within `tolerance` and errors are monotone over the last
    /// decade.
    pub fn from_curve(
        t_grid: Vec<f64>,
        ratios: Vec<f64>,
        targets: Vec<f64>,
        tolerance: f64,
        diagnostics: Vec<String>,
    ) -> Result<Self> {
        if t_grid.is_empty() {
            return Err(Error::Numerical(
                "no grid point produced a finite ratio".into(),
            ));
        }
        let rel_errors: Vec<f64> = ratios
            .iter()
            .zip(&targets)
            .map(|(&r, &l)| relative_error(r, l))
            .collect();
        let max_rel_error = rel_errors.iter().copied().fold(0.0, f64::max);
        let final_rel_error = *rel_errors.last().expect("non-empty");
        let monotone_tail = monotone_over_last_decade(&t_grid, &rel_errors);
        let limit = *targets.last().expect("non-empty");
        let passed = final_rel_error < tolerance && monotone_tail;
        Ok(ConvergenceReport {
            t_grid,
            ratios,
            targets,
            limit,
            rel_errors,
            max_rel_error,
            final_rel_error,
            tolerance,
            monotone_tail,
            passed,
            std_errors: Vec::new(),
            slope: None,
            diagnostics,
        })
    }
}

pub(crate) fn relative_error(value: f64, target: f64) -> f64 {
    if target == 0.0 {
        value.abs()
    } else {
        ((value - target) / target).abs()
    }
}

fn monotone_over_last_decade(grid: &[f64], errors: &[f64]) -> bool {
    let last = grid[grid.len() - 1];
    let start = grid.partition_point(|&t| t < last / 10.0 * (1.0 - 1e-12));
    errors[start..]
        .windows(2)
        .all(|w| w[1] <= w[0] || w[1] <= MONOTONE_FLOOR)
}

/// Log-log least-squares slope.
#[derive(Debug, Clone, PartialEq)]
pub struct TailIndexEstimate {
    pub index: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub grid: Vec<f64>,
}

/// OLS slope of `log f(t)` against `log t`. Needs at least 8 increasing
/// positive abscissae and positive values.
pub fn rv_index_estimate<F: FnMut(f64) -> f64>(mut f: F, t_grid: &[f64]) -> Result<TailIndexEstimate> {
    check_grid(t_grid)?;
    if t_grid.len() < 8 {
        return Err(Error::invalid(
            "t_grid",
            format!("need at least 8 points, got {}", t_grid.len()),
        ));
    }
    let mut ys = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let v = f(t);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("function value at t = {t} is {v}; need positive")));
        }
        ys.push(libm::log(v));
    }
    let xs: Vec<f64> = t_grid.iter().map(|&t| libm::log(t)).collect();
    let (index, intercept, stderr) = ols(&xs, &ys);
    Ok(TailIndexEstimate {
        index,
        stderr,
        intercept,
        grid: t_grid.to_vec(),
    })
}

/// Same regression on precomputed `log f` values.
pub fn log_slope_estimate(t_grid: &[f64], ln_values: &[f64]) -> Result<TailIndexEstimate> {
    check_grid(t_grid)?;
    if t_grid.len() != ln_values.len() || t_grid.len() < 3 {
        return Err(Error::invalid("t_grid", "need matching lengths and at least 3 points"));
    }
    if ln_values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("log values"));
    }
    let xs: Vec<f64> = t_grid.iter().map(|&t| libm::log(t)).collect();
    let (index, intercept, stderr) = ols(&xs, ln_values);
    Ok(TailIndexEstimate {
        index,
        stderr,
        intercept,
        grid: t_grid.to_vec(),
    })
}

fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    let stderr = if xs.len() > 2 {
        libm::sqrt(ssr / (n - 2.0) / sxx)
    } else {
        0.0
    };
    (slope, intercept, stderr)
}
