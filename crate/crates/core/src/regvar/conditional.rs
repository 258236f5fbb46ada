use alloc::format;
use alloc::vec::Vec;

use super::limit::MAX_QUADRATURE_DIM;
use super::{check_grid, log_slope_estimate, BoxRegion, ConvergenceReport, TailIndexEstimate};
use crate::error::{Error, Result};
use crate::liouville::{condition, LiouvilleModel};
use crate::quadrature::{integrate_box, QuadOptions};
use crate::special::ln_gamma;

/// Largest allowed spread of `ratio/target` over the last decade.
pub const FLATNESS_TOL: f64 = 0.02;
const REL_TOL: f64 = 1e-9;

/// Conditional tail curve with the regressions used to read off its
/// regular-variation index.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTailReport {
    /// `P(· ∈ tB | X_i = t x_i, i ≤ r) / V(t)` against `κ' ∫_B ν`-integrand.
    pub curve: ConvergenceReport,
    /// `κ' = 1/∏_{i>r} Γ(a_i)`, the normalizing constant of the conditional law.
    pub kappa: f64,
    /// Last ratio divided by the unnormalized limit integral.
    pub fitted_kappa: f64,
    /// `max |q_k/q_last − 1|` over the last decade, `q = ratio/target`.
    pub flatness: f64,
    /// Log-log slope of the conditional probability `P(· ∈ tB | …)`.
    pub probability_slope: TailIndexEstimate,
    /// Log-log slope of `P(· ∈ tB | …) · W^a g(t Σ_{i≤r} x_i)`, the joint
    /// density mass of the event.
    pub joint_mass_slope: TailIndexEstimate,
    /// `−β + Σ_{i>r} a_i`.
    pub expected_slope: f64,
}

pub fn conditional_tail_ratio(
    m: &LiouvilleModel,
    r: usize,
    x_fixed_unit: &[f64],
    b: &BoxRegion,
    t_grid: &[f64],
    tolerance: f64,
) -> Result<ConditionalTailReport> {
    check_grid(t_grid)?;
    if r == 0 || r >= m.dim() {
        return Err(Error::invalid("r", format!("need 1 <= r < d = {}, got {r}", m.dim())));
    }
    let k = m.dim() - r;
    if b.dim() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: b.dim(),
        });
    }
    if k > MAX_QUADRATURE_DIM {
        return Err(Error::invalid(
            "r",
            format!("conditional quadrature supports at most {MAX_QUADRATURE_DIM} free coordinates"),
        ));
    }
    if x_fixed_unit.len() != r || x_fixed_unit.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::invalid("x_fixed", format!("need {r} positive finite values")));
    }
    let beta = m.driving().tail_index()?;
    let shapes = &m.shapes()[r..];
    let a: f64 = shapes.iter().sum();
    let fixed_sum: f64 = x_fixed_unit.iter().sum();
    let opts = QuadOptions::default().with_rel_tol(REL_TOL).with_abs_tol(0.0);

    let limit_integral = integrate_box(
        |u: &[f64]| {
            let s: f64 = u.iter().sum();
            let mut v = libm::pow((fixed_sum + s) / (1.0 + fixed_sum), -beta);
            for (&ui, &ai) in u.iter().zip(shapes) {
                if ai != 1.0 {
                    v *= libm::pow(ui, ai - 1.0);
                }
            }
            v
        },
        b.lower(),
        b.upper(),
        opts,
    );
    if !limit_integral.converged || !limit_integral.value.is_finite() {
        return Err(Error::Divergent(format!(
            "limit integral over B did not converge ({})",
            limit_integral.value
        )));
    }
    let kappa = libm::exp(-shapes.iter().map(|&ai| ln_gamma(ai)).sum::<f64>());
    let target = kappa * limit_integral.value;

    let mut ratios = Vec::with_capacity(t_grid.len());
    let mut ln_probs = Vec::with_capacity(t_grid.len());
    let mut ln_joint = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let fixed: Vec<f64> = x_fixed_unit.iter().map(|&x| t * x).collect();
        let c = condition(m, r, &fixed)?;
        let lt = libm::log(t);
        let scale = k as f64 * lt;
        let p = integrate_box(
            |u: &[f64]| {
                let y: Vec<f64> = u.iter().map(|&v| t * v).collect();
                c.model.ln_density(&y).map(|l| libm::exp(l + scale)).unwrap_or(0.0)
            },
            b.lower(),
            b.upper(),
            opts,
        );
        if !p.converged || !(p.value > 0.0) || !p.value.is_finite() {
            return Err(Error::Divergent(format!(
                "conditional probability quadrature failed at t = {t:e} ({})",
                p.value
            )));
        }
        let ln_v = c.conditional_driving().ln_value(t) + a * lt;
        ratios.push(libm::exp(libm::log(p.value) - ln_v));
        ln_probs.push(libm::log(p.value));
        ln_joint.push(libm::log(p.value) + libm::log(c.normalizer));
    }

    let targets = alloc::vec![target; t_grid.len()];
    let mut curve =
        ConvergenceReport::from_curve(t_grid.to_vec(), ratios, targets, tolerance, Vec::new())?;
    let last_q = curve.ratios[curve.ratios.len() - 1] / target;
    let t_last = t_grid[t_grid.len() - 1];
    let flatness = t_grid
        .iter()
        .zip(&curve.ratios)
        .filter(|(&t, _)| t >= t_last / 10.0 * (1.0 - 1e-12))
        .map(|(_, &q)| (q / target / last_q - 1.0).abs())
        .fold(0.0, f64::max);
    curve.passed = curve.final_rel_error < tolerance && flatness <= FLATNESS_TOL;
    let probability_slope = log_slope_estimate(t_grid, &ln_probs)?;
    let joint_mass_slope = log_slope_estimate(t_grid, &ln_joint)?;
    curve.slope = Some(probability_slope.clone());
    Ok(ConditionalTailReport {
        fitted_kappa: curve.ratios[curve.ratios.len() - 1] / limit_integral.value,
        curve,
        kappa,
        flatness,
        probability_slope,
        joint_mass_slope,
        expected_slope: a - beta,
    })
}
