//! Driving functions `g` of Liouville laws, their regular-variation
//! metadata, the integrability functional `∫₀^∞ t^{A−1} g(t) dt`, and Weyl
//! fractional integrals.

mod tabulated;
mod weyl;

use alloc::boxed::Box;
use alloc::format;

pub use tabulated::TabulatedFunction;
pub use weyl::{
    power_weighted_integral, weyl_integral, weyl_limit_constant, weyl_quadrature, WeylResult,
};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::special::beta as beta_fn;

/// Family tag carried in configs and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    InvertedDirichlet,
    ParetoLog,
    Exponential,
    Tabulated,
    Shifted,
    Weyl,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::InvertedDirichlet => "inverted-dirichlet",
            Family::ParetoLog => "pareto-log",
            Family::Exponential => "exponential",
            Family::Tabulated => "tabulated",
            Family::Shifted => "shifted",
            Family::Weyl => "weyl",
        }
    }
}

/// A nonnegative continuous function on `[0, ∞)`.
///
/// The first four variants are user-facing families. `Shifted` and `Weyl`
/// arise from conditioning and marginalizing a Liouville law.
#[derive(Debug, Clone, PartialEq)]
pub enum DrivingFunction {
    /// `(1 + t)^{−β}`
    InvertedDirichlet { beta: f64 },
    /// `(1 + t)^{−β} · log(e + t)^δ`
    ParetoLog { beta: f64, delta: f64 },
    /// `e^{−rate·t}`; rapidly varying, kept as a negative control.
    Exponential { rate: f64 },
    Tabulated(TabulatedFunction),
    /// `factor · base(t + shift)`
    Shifted {
        base: Box<DrivingFunction>,
        shift: f64,
        factor: f64,
    },
    /// `W^order base`, evaluated by quadrature.
    Weyl {
        base: Box<DrivingFunction>,
        order: f64,
    },
}

fn check_nonneg(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite(name));
    }
    if v < 0.0 {
        return Err(Error::invalid(name, format!("must be nonnegative, got {v}")));
    }
    Ok(())
}

impl DrivingFunction {
    pub fn inverted_dirichlet(beta: f64) -> Result<Self> {
        check_nonneg("beta", beta)?;
        Ok(DrivingFunction::InvertedDirichlet { beta })
    }

    pub fn pareto_log(beta: f64, delta: f64) -> Result<Self> {
        check_nonneg("beta", beta)?;
        if !delta.is_finite() {
            return Err(Error::NonFinite("delta"));
        }
        Ok(DrivingFunction::ParetoLog { beta, delta })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !rate.is_finite() {
            return Err(Error::NonFinite("rate"));
        }
        if rate <= 0.0 {
            return Err(Error::invalid("rate", "must be positive"));
        }
        Ok(DrivingFunction::Exponential { rate })
    }

    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        Ok(DrivingFunction::Tabulated(TabulatedFunction::new(points)?))
    }

    /// `factor · self(t + shift)`.
    pub fn shifted(self, shift: f64, factor: f64) -> Result<Self> {
        check_nonneg("shift", shift)?;
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::invalid("factor", "must be positive and finite"));
        }
        Ok(DrivingFunction::Shifted {
            base: Box::new(self),
            shift,
            factor,
        })
    }

    pub fn family(&self) -> Family {
        match self {
            DrivingFunction::InvertedDirichlet { .. } => Family::InvertedDirichlet,
            DrivingFunction::ParetoLog { .. } => Family::ParetoLog,
            DrivingFunction::Exponential { .. } => Family::Exponential,
            DrivingFunction::Tabulated(_) => Family::Tabulated,
            DrivingFunction::Shifted { .. } => Family::Shifted,
            DrivingFunction::Weyl { .. } => Family::Weyl,
        }
    }

    /// Declared regular-variation index `−β`; `None` when the function is
    /// not known to be regularly varying.
    pub fn rv_index(&self) -> Option<f64> {
        match self {
            DrivingFunction::InvertedDirichlet { beta } | DrivingFunction::ParetoLog { beta, .. } => {
                Some(-beta)
            }
            DrivingFunction::Exponential { .. } | DrivingFunction::Tabulated(_) => None,
            DrivingFunction::Shifted { base, .. } => base.rv_index(),
            DrivingFunction::Weyl { base, order } => base.rv_index().map(|r| r + order),
        }
    }

    /// Tail index `β = −rv_index`, or [`Error::NotRegularlyVarying`].
    pub fn tail_index(&self) -> Result<f64> {
        self.rv_index().map(|r| -r).ok_or(Error::NotRegularlyVarying)
    }

    /// `g(t)` for `t ≥ 0`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("driving function needs t >= 0, got {t}")));
        }
        let v = self.value(t);
        if v.is_nan() {
            return Err(Error::Numerical(format!("driving function evaluated to NaN at t = {t}")));
        }
        Ok(v)
    }

    /// Unchecked `g(t)`; callers guarantee `t ≥ 0`.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            DrivingFunction::InvertedDirichlet { beta } => libm::pow(1.0 + t, -beta),
            DrivingFunction::ParetoLog { beta, delta } => {
                let base = libm::pow(1.0 + t, -beta);
                if *delta == 0.0 {
                    base
                } else {
                    base * libm::pow(libm::log(core::f64::consts::E + t), *delta)
                }
            }
            DrivingFunction::Exponential { rate } => libm::exp(-rate * t),
            DrivingFunction::Tabulated(tab) => libm::exp(tab.ln_value(t)),
            DrivingFunction::Shifted { base, shift, factor } => factor * base.value(t + shift),
            DrivingFunction::Weyl { base, order } => weyl_quadrature(base, *order, t)
                .map(|w| w.value)
                .unwrap_or(f64::NAN),
        }
    }

    /// `log g(t)`, finite far into tails where `g` itself underflows.
    pub fn ln_value(&self, t: f64) -> f64 {
        match self {
            DrivingFunction::InvertedDirichlet { beta } => -beta * libm::log1p(t),
            DrivingFunction::ParetoLog { beta, delta } => {
                let mut l = -beta * libm::log1p(t);
                if *delta != 0.0 {
                    l += delta * libm::log(libm::log(core::f64::consts::E + t));
                }
                l
            }
            DrivingFunction::Exponential { rate } => -rate * t,
            DrivingFunction::Tabulated(tab) => tab.ln_value(t),
            DrivingFunction::Shifted { base, shift, factor } => {
                libm::log(*factor) + base.ln_value(t + shift)
            }
            DrivingFunction::Weyl { .. } => libm::log(self.value(t)),
        }
    }

    /// `W^order g` as a driving function, in closed form when one exists.
    pub fn weyl_transform(&self, order: f64) -> Result<DrivingFunction> {
        weyl::check_order(self, order)?;
        Ok(match self {
            DrivingFunction::InvertedDirichlet { beta } => DrivingFunction::Shifted {
                base: Box::new(DrivingFunction::InvertedDirichlet { beta: beta - order }),
                shift: 0.0,
                factor: crate::special::gamma_ratio(beta - order, *beta),
            },
            DrivingFunction::Exponential { rate } => DrivingFunction::Shifted {
                base: Box::new(self.clone()),
                shift: 0.0,
                factor: libm::pow(*rate, -order),
            },
            DrivingFunction::Shifted { base, shift, factor }
                if matches!(
                    **base,
                    DrivingFunction::InvertedDirichlet { .. } | DrivingFunction::Exponential { .. }
                ) =>
            {
                match base.weyl_transform(order)? {
                    DrivingFunction::Shifted {
                        base: inner,
                        factor: f2,
                        ..
                    } => DrivingFunction::Shifted {
                        base: inner,
                        shift: *shift,
                        factor: factor * f2,
                    },
                    other => other,
                }
            }
            _ => DrivingFunction::Weyl {
                base: Box::new(self.clone()),
                order,
            },
        })
    }
}

/// `g(tx) / g(t)`; tends to `x^{−β}` when `g ∈ RV_{−β}`.
pub fn rv_ratio(g: &DrivingFunction, t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) || !(x > 0.0) || !t.is_finite() || !x.is_finite() {
        return Err(Error::Domain(format!("rv_ratio needs t > 0 and x > 0, got t = {t}, x = {x}")));
    }
    let ln_den = g.ln_value(t);
    if !ln_den.is_finite() {
        return Err(Error::Domain(format!("g({t}) = 0; ratio undefined")));
    }
    let ratio = libm::exp(g.ln_value(t * x) - ln_den);
    if ratio.is_nan() {
        return Err(Error::Numerical("ratio is NaN".into()));
    }
    Ok(ratio)
}

/// Outcome of [`integrability_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrability {
    pub finite: bool,
    /// `∫₀^∞ t^{A−1} g(t) dt`; `+∞` when divergent.
    pub value: f64,
    pub abs_error: f64,
}

impl Integrability {
    fn divergent() -> Self {
        Integrability {
            finite: false,
            value: f64::INFINITY,
            abs_error: 0.0,
        }
    }
}

/// Whether `∫₀^∞ t^{A−1} g(t) dt` converges, analytically from the tail
/// behavior, and its value by quadrature under `u = 1/(1+t)`.
pub fn integrability_check(g: &DrivingFunction, a_sum: f64) -> Result<Integrability> {
    if !(a_sum > 0.0) || !a_sum.is_finite() {
        return Err(Error::invalid("a_sum", "must be positive and finite"));
    }
    if !tail_integrable(g, a_sum) {
        return Ok(Integrability::divergent());
    }
    let opts = QuadOptions::default()
        .with_rel_tol(1e-13)
        .with_abs_tol(0.0)
        .with_max_intervals(4000);
    let r = integrate(
        |u| {
            let t = (1.0 - u) / u;
            let ln = (a_sum - 1.0) * libm::log(t) + g.ln_value(t) - 2.0 * libm::log(u);
            let v = libm::exp(ln);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        opts,
    );
    if !r.converged && r.abs_error > 1e-9 * r.value.abs() {
        return Err(Error::Numerical(format!(
            "integrability quadrature did not converge (value {}, error {})",
            r.value, r.abs_error
        )));
    }
    Ok(Integrability {
        finite: true,
        value: r.value,
        abs_error: r.abs_error,
    })
}

fn tail_integrable(g: &DrivingFunction, a_sum: f64) -> bool {
    match g {
        DrivingFunction::Exponential { .. } => true,
        DrivingFunction::Tabulated(tab) => tab.tail_slope() < -a_sum,
        DrivingFunction::Shifted { base, .. } => tail_integrable(base, a_sum),
        DrivingFunction::Weyl { base, order } => match base.as_ref() {
            DrivingFunction::Exponential { .. } => true,
            DrivingFunction::Tabulated(tab) => tab.tail_slope() + order < -a_sum,
            other => tail_integrable(other, a_sum + order),
        },
        DrivingFunction::InvertedDirichlet { beta } | DrivingFunction::ParetoLog { beta, .. } => {
            *beta > a_sum
        }
    }
}

/// Closed-form `∫₀^∞ t^{A−1}(1+t)^{−β} dt = B(A, β−A)`, used as an oracle.
pub fn inverted_dirichlet_moment(a_sum: f64, beta: f64) -> f64 {
    beta_fn(a_sum, beta - a_sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_formulas() {
        let g = DrivingFunction::inverted_dirichlet(3.0).unwrap();
        assert_eq!(g.eval(0.0).unwrap(), 1.0);
        assert_eq!(g.eval(1.0).unwrap(), 0.125);
        let p = DrivingFunction::pareto_log(3.0, 0.0).unwrap();
        assert_eq!(p.eval(1.0).unwrap(), 0.125);
        let p = DrivingFunction::pareto_log(2.0, 1.0).unwrap();
        let expect = libm::pow(3.0, -2.0) * libm::log(core::f64::consts::E + 2.0);
        assert!((p.eval(2.0).unwrap() - expect).abs() < 1e-16);
        assert!(g.eval(-0.5).is_err());
    }

    #[test]
    fn ln_value_matches_value() {
        let gs = [
            DrivingFunction::inverted_dirichlet(3.0).unwrap(),
            DrivingFunction::pareto_log(2.5, -1.5).unwrap(),
            DrivingFunction::exponential(0.7).unwrap(),
            DrivingFunction::inverted_dirichlet(4.0).unwrap().shifted(2.0, 3.0).unwrap(),
        ];
        for g in &gs {
            for &t in &[0.0, 0.3, 1.0, 17.0, 400.0] {
                let direct = g.value(t);
                let via_ln = libm::exp(g.ln_value(t));
                assert!((direct - via_ln).abs() <= 1e-13 * direct, "{g:?} at {t}");
            }
        }
    }

    #[test]
    fn rv_metadata() {
        assert_eq!(DrivingFunction::inverted_dirichlet(3.0).unwrap().rv_index(), Some(-3.0));
        assert_eq!(DrivingFunction::exponential(1.0).unwrap().rv_index(), None);
        let shifted = DrivingFunction::pareto_log(5.0, 1.0).unwrap().shifted(2.0, 0.1).unwrap();
        assert_eq!(shifted.rv_index(), Some(-5.0));
        assert_eq!(
            DrivingFunction::exponential(1.0).unwrap().tail_index(),
            Err(Error::NotRegularlyVarying)
        );
    }

    #[test]
    fn rv_ratio_values() {
        let g = DrivingFunction::inverted_dirichlet(3.0).unwrap();
        assert_eq!(rv_ratio(&g, 7.0, 1.0).unwrap(), 1.0);
        let r = rv_ratio(&g, 1e6, 2.0).unwrap();
        assert!((r - 0.125).abs() < 1e-4 * 0.125);
        let e = DrivingFunction::exponential(1.0).unwrap();
        assert!(rv_ratio(&e, 100.0, 2.0).unwrap() < 1e-10);
        assert!(rv_ratio(&g, 0.0, 2.0).is_err());
    }

    #[test]
    fn integrability_examples() {
        let g = DrivingFunction::inverted_dirichlet(3.0).unwrap();
        let r = integrability_check(&g, 2.0).unwrap();
        assert!(r.finite);
        assert!((r.value - 0.5).abs() < 1e-12);
        let r = integrability_check(&g, 3.0).unwrap();
        assert!(!r.finite);
        assert_eq!(r.value, f64::INFINITY);
        let e = DrivingFunction::exponential(1.0).unwrap();
        let r = integrability_check(&e, 2.0).unwrap();
        assert!(r.finite);
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(integrability_check(&g, 0.0).is_err());
    }

    #[test]
    fn weyl_transform_closed_forms() {
        let g = DrivingFunction::inverted_dirichlet(3.0).unwrap();
        let w = g.weyl_transform(1.0).unwrap();
        // W¹g(t) = (1/2)(1+t)^{-2}
        assert!((w.value(1.0) - 0.125).abs() < 1e-15);
        assert_eq!(w.rv_index(), Some(-2.0));
        assert!(g.weyl_transform(3.0).is_err());
        let p = DrivingFunction::pareto_log(4.0, 1.0).unwrap();
        assert_eq!(p.weyl_transform(1.0).unwrap().family(), Family::Weyl);
    }
}
