use alloc::format;

use super::DrivingFunction;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, Integral, QuadOptions};
use crate::special::{gamma, gamma_ratio};

/// `W^α g(t) = (1/Γ(α)) ∫_t^∞ (s−t)^{α−1} g(s) ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylResult {
    pub order: f64,
    pub at: f64,
    pub value: f64,
    pub abs_error_estimate: f64,
}

pub(super) fn check_order(g: &DrivingFunction, order: f64) -> Result<()> {
    if !(order > 0.0) || !order.is_finite() {
        return Err(Error::invalid("order", format!("must be positive, got {order}")));
    }
    if let Some(rv) = g.rv_index() {
        let beta = -rv;
        if order >= beta {
            return Err(Error::Divergent(format!(
                "Weyl integral of order {order} diverges for tail index {beta}"
            )));
        }
    } else if let DrivingFunction::Tabulated(tab) = g {
        if tab.tail_slope() + order >= 0.0 {
            return Err(Error::Divergent(format!(
                "Weyl integral of order {order} diverges for tabulated tail slope {}",
                tab.tail_slope()
            )));
        }
    }
    Ok(())
}

fn check_point(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("Weyl integral needs t >= 0, got {t}")));
    }
    Ok(())
}

/// Weyl fractional integral, in closed form for the inverted-Dirichlet and
/// exponential families (and their shifts), by quadrature otherwise.
pub fn weyl_integral(g: &DrivingFunction, order: f64, t: f64) -> Result<WeylResult> {
    check_point(t)?;
    check_order(g, order)?;
    if let Some(value) = closed_form(g, order, t) {
        return Ok(WeylResult {
            order,
            at: t,
            value,
            abs_error_estimate: 4.0 * f64::EPSILON * value,
        });
    }
    weyl_quadrature(g, order, t)
}

fn closed_form(g: &DrivingFunction, order: f64, t: f64) -> Option<f64> {
    match g {
        DrivingFunction::InvertedDirichlet { beta } => {
            Some(gamma_ratio(beta - order, *beta) * libm::pow(1.0 + t, order - beta))
        }
        DrivingFunction::Exponential { rate } => Some(libm::pow(*rate, -order) * libm::exp(-rate * t)),
        DrivingFunction::Shifted { base, shift, factor } => {
            closed_form(base, order, t + shift).map(|v| factor * v)
        }
        _ => None,
    }
}

/// Weyl fractional integral by adaptive quadrature, regardless of family.
pub fn weyl_quadrature(g: &DrivingFunction, order: f64, t: f64) -> Result<WeylResult> {
    check_point(t)?;
    check_order(g, order)?;
    let w = t.max(1.0);
    let r = power_weighted_integral(|y| g.value(t + y), order, w);
    if !r.converged && !(r.abs_error <= 1e-8 * r.value.abs()) {
        return Err(Error::Numerical(format!(
            "Weyl quadrature did not converge at t = {t} (value {}, error {})",
            r.value, r.abs_error
        )));
    }
    let norm = gamma(order);
    Ok(WeylResult {
        order,
        at: t,
        value: r.value / norm,
        abs_error_estimate: r.abs_error / norm,
    })
}

/// `∫₀^∞ y^{α−1} φ(y) dy`, split at `y = w`.
///
/// On `[0, w]` with `α < 1` the weight is removed by `u = (y/w)^α`; the tail
/// `[w, ∞)` is folded onto `(0, 1]` by `y = w/v`.
pub fn power_weighted_integral<F: Fn(f64) -> f64>(phi: F, alpha: f64, w: f64) -> Integral {
    let opts = QuadOptions::default()
        .with_rel_tol(1e-12)
        .with_abs_tol(0.0)
        .with_max_intervals(3000);
    let scale = libm::pow(w, alpha);
    let head = if alpha < 1.0 {
        integrate(|u| phi(w * libm::pow(u, 1.0 / alpha)) / alpha, 0.0, 1.0, opts)
    } else if alpha == 1.0 {
        integrate(|z| phi(w * z), 0.0, 1.0, opts)
    } else {
        integrate(|z| libm::pow(z, alpha - 1.0) * phi(w * z), 0.0, 1.0, opts)
    };
    let tail = integrate(
        |v| {
            let p = phi(w / v);
            if p == 0.0 {
                0.0
            } else {
                p * libm::pow(v, -alpha - 1.0)
            }
        },
        0.0,
        1.0,
        opts,
    );
    let value = scale * (head.value + tail.value);
    let abs_error = scale * (head.abs_error + tail.abs_error);
    Integral {
        value,
        abs_error,
        evaluations: head.evaluations + tail.evaluations,
        converged: value.is_finite() && abs_error <= 1e-10 * value.abs().max(1e-300),
    }
}

/// `lim W^α g(t) / (t^α g(t)) = Γ(β−α)/Γ(β)` for `g ∈ RV_{−β}`, `0 < α < β`.
pub fn weyl_limit_constant(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::invalid("alpha", "must be positive and finite"));
    }
    if alpha >= beta {
        return Err(Error::Divergent(format!(
            "Weyl limit constant needs alpha < beta (alpha = {alpha}, beta = {beta})"
        )));
    }
    Ok(gamma_ratio(beta - alpha, beta))
}
