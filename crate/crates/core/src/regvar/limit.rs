use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Open01};

use super::{check_grid, relative_error, BoxRegion, ConvergenceReport, ScalingSpec};
use crate::error::{Error, Result};
use crate::liouville::{stream_rng, LiouvilleModel};
use crate::quadrature::{integrate_box, QuadOptions};

/// Quadrature is used up to this dimension; importance sampling above it.
pub const MAX_QUADRATURE_DIM: usize = 3;
const MEASURE_REL_TOL: f64 = 1e-10;
const IMPORTANCE_SAMPLES: usize = 1 << 20;
const IMPORTANCE_SEED: u64 = 0x005e_ed0f_1a3b;

fn check_pair(m: &LiouvilleModel, s: &ScalingSpec) -> Result<()> {
    if s.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: s.dim(),
        });
    }
    if m.driving().rv_index().is_none() && !s.is_hypothesized() {
        return Err(Error::NotRegularlyVarying);
    }
    Ok(())
}

fn check_point(m: &LiouvilleModel, x: &[f64]) -> Result<()> {
    if x.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain("x must be strictly positive and finite".into()));
    }
    Ok(())
}

fn power_product(shapes: &[f64], x: &[f64]) -> f64 {
    let mut p = 1.0;
    for (&xi, &a) in x.iter().zip(shapes) {
        if a != 1.0 {
            p *= libm::pow(xi, a - 1.0);
        }
    }
    p
}

/// `λ(x) = κ (Σ_{i∈(α)} x_i)^{−β} ∏ x_i^{a_i−1}`.
pub fn limit_function(m: &LiouvilleModel, s: &ScalingSpec, x: &[f64]) -> Result<f64> {
    check_pair(m, s)?;
    check_point(m, x)?;
    let mut lead = 0.0;
    for &i in s.argmax_set() {
        lead += x[i];
    }
    Ok(m.kappa() * libm::pow(lead, -s.beta()) * power_product(m.shapes(), x))
}

/// `V(t) = g(t^α) t^{Σα_i a_i}`.
pub fn scale_function_v(m: &LiouvilleModel, s: &ScalingSpec, t: f64) -> Result<f64> {
    Ok(libm::exp(ln_scale_function_v(m, s, t)?))
}

pub fn ln_scale_function_v(m: &LiouvilleModel, s: &ScalingSpec, t: f64) -> Result<f64> {
    check_pair(m, s)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("scale function needs t > 0, got {t}")));
    }
    let lt = libm::log(t);
    Ok(m.driving().ln_value(libm::pow(t, s.alpha_max())) + s.weighted_shape_sum() * lt)
}

/// `f(t^{α_1}x_1, …, t^{α_d}x_d) / (t^{−Σα_i} V(t))`, evaluated in log space.
pub fn density_ratio(m: &LiouvilleModel, s: &ScalingSpec, x: &[f64], t: f64) -> Result<f64> {
    check_point(m, x)?;
    let ln_v = ln_scale_function_v(m, s, t)?;
    let lt = libm::log(t);
    let scaled: Vec<f64> = x
        .iter()
        .zip(s.exponents())
        .map(|(&xi, &a)| libm::pow(t, a) * xi)
        .collect();
    let ln_f = m.ln_density(&scaled)?;
    Ok(libm::exp(ln_f + s.trace() * lt - ln_v))
}

/// `λ` for `α = (1, …, 1)`: `κ (Σx_i)^{−β} ∏ x_i^{a_i−1}`.
pub fn isotropic_limit_function(m: &LiouvilleModel, x: &[f64]) -> Result<f64> {
    let beta = m.driving().tail_index()?;
    check_point(m, x)?;
    let mut total = 0.0;
    for &xi in x {
        total += xi;
    }
    Ok(m.kappa() * libm::pow(total, -beta) * power_product(m.shapes(), x))
}

/// `V(t) = g(t) t^{Σa_i}`.
pub fn isotropic_scale_function_v(m: &LiouvilleModel, t: f64) -> Result<f64> {
    Ok(libm::exp(isotropic_ln_v(m, t)?))
}

fn isotropic_ln_v(m: &LiouvilleModel, t: f64) -> Result<f64> {
    m.driving().tail_index()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("scale function needs t > 0, got {t}")));
    }
    let lt = libm::log(t);
    let a: f64 = m.shapes().iter().map(|a| 1.0 * a).sum();
    Ok(m.driving().ln_value(t) + a * lt)
}

/// `f(tx) / (t^{−d} V(t))`.
pub fn isotropic_density_ratio(m: &LiouvilleModel, x: &[f64], t: f64) -> Result<f64> {
    check_point(m, x)?;
    let ln_v = isotropic_ln_v(m, t)?;
    let lt = libm::log(t);
    let scaled: Vec<f64> = x.iter().map(|&xi| t * xi).collect();
    let ln_f = m.ln_density(&scaled)?;
    let d: f64 = x.iter().map(|_| 1.0).sum();
    Ok(libm::exp(ln_f + d * lt - ln_v))
}

/// Density-ratio curve against `λ(x)`. Grid points where the density
/// underflows are skipped and recorded as diagnostics.
pub fn density_ratio_curve(
    m: &LiouvilleModel,
    s: &ScalingSpec,
    x: &[f64],
    t_grid: &[f64],
    tolerance: f64,
) -> Result<ConvergenceReport> {
    check_grid(t_grid)?;
    let limit = limit_function(m, s, x)?;
    let mut ts = Vec::with_capacity(t_grid.len());
    let mut ratios = Vec::with_capacity(t_grid.len());
    let mut diagnostics: Vec<String> = Vec::new();
    for &t in t_grid {
        let r = density_ratio(m, s, x, t)?;
        if r.is_finite() {
            ts.push(t);
            ratios.push(r);
        } else {
            diagnostics.push(format!("t = {t:e}: density ratio {r} (under/overflow), skipped"));
        }
    }
    let targets = alloc::vec![limit; ts.len()];
    ConvergenceReport::from_curve(ts, ratios, targets, tolerance, diagnostics)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMethod {
    Analytic,
    Quadrature,
    ImportanceSampling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureEstimate {
    pub value: f64,
    pub abs_error: f64,
    pub method: MeasureMethod,
}

/// `μ(B) = ∫_B λ(x) dx`; `+∞` when the box is unbounded in a direction
/// along which `λ` is not integrable.
pub fn limiting_measure(m: &LiouvilleModel, s: &ScalingSpec, b: &BoxRegion) -> Result<f64> {
    limiting_measure_estimate(m, s, b).map(|e| e.value)
}

pub fn limiting_measure_estimate(
    m: &LiouvilleModel,
    s: &ScalingSpec,
    b: &BoxRegion,
) -> Result<MeasureEstimate> {
    check_pair(m, s)?;
    if b.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            got: b.dim(),
        });
    }
    if infinite_measure(m, s, b) {
        return Ok(MeasureEstimate {
            value: f64::INFINITY,
            abs_error: 0.0,
            method: MeasureMethod::Analytic,
        });
    }
    let lam = |x: &[f64]| {
        let mut lead = 0.0;
        for &i in s.argmax_set() {
            lead += x[i];
        }
        m.kappa() * libm::pow(lead, -s.beta()) * power_product(m.shapes(), x)
    };
    if m.dim() <= MAX_QUADRATURE_DIM {
        let opts = QuadOptions::default()
            .with_rel_tol(MEASURE_REL_TOL)
            .with_abs_tol(0.0);
        let r = integrate_box(lam, b.lower(), b.upper(), opts);
        if !r.value.is_finite() {
            return Err(Error::Numerical(format!("μ(B) quadrature returned {}", r.value)));
        }
        return Ok(MeasureEstimate {
            value: r.value,
            abs_error: r.abs_error,
            method: MeasureMethod::Quadrature,
        });
    }
    importance_measure(m, s, b, lam)
}

/// Unbounded directions: any coordinate outside `(α)` diverges like
/// `∫^∞ x^{a−1}`; the unbounded part `K ⊆ (α)` converges iff `β > Σ_K a_i`.
fn infinite_measure(m: &LiouvilleModel, s: &ScalingSpec, b: &BoxRegion) -> bool {
    let mut k_shape = 0.0;
    for (i, &u) in b.upper().iter().enumerate() {
        if u.is_infinite() {
            if !s.argmax_set().contains(&i) {
                return true;
            }
            k_shape += m.shapes()[i];
        }
    }
    k_shape > 0.0 && s.beta() <= k_shape
}

/// Per-coordinate proposal on `[l, u]`.
enum Proposal {
    Uniform { l: f64, u: f64 },
    LogUniform { l: f64, ln_ratio: f64 },
    Pareto { l: f64, c: f64 },
}

impl Proposal {
    fn draw<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let v: f64 = Open01.sample(rng);
        match *self {
            Proposal::Uniform { l, u } => (l + (u - l) * v, 1.0 / (u - l)),
            Proposal::LogUniform { l, ln_ratio } => {
                let x = l * libm::exp(v * ln_ratio);
                (x, 1.0 / (x * ln_ratio))
            }
            Proposal::Pareto { l, c } => {
                let x = l * libm::pow(v, -1.0 / c);
                (x, c * libm::pow(l, c) * libm::pow(x, -c - 1.0))
            }
        }
    }
}

fn importance_measure<F: Fn(&[f64]) -> f64>(
    m: &LiouvilleModel,
    s: &ScalingSpec,
    b: &BoxRegion,
    lam: F,
) -> Result<MeasureEstimate> {
    let unbounded: Vec<usize> = (0..b.dim()).filter(|&i| b.upper()[i].is_infinite()).collect();
    let k_shape: f64 = unbounded.iter().map(|&i| m.shapes()[i]).sum();
    // Σc_i = β − Σ_K a_i keeps the weight variance finite along every ray.
    let c = if unbounded.is_empty() {
        1.0
    } else {
        (s.beta() - k_shape) / unbounded.len() as f64
    };
    let proposals: Vec<Proposal> = b
        .lower()
        .iter()
        .zip(b.upper())
        .map(|(&l, &u)| {
            if u.is_infinite() {
                Proposal::Pareto { l, c }
            } else if u / l > 10.0 {
                Proposal::LogUniform {
                    l,
                    ln_ratio: libm::log(u / l),
                }
            } else {
                Proposal::Uniform { l, u }
            }
        })
        .collect();
    let mut rng = stream_rng(IMPORTANCE_SEED, 0);
    let mut x = alloc::vec![0.0; b.dim()];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..IMPORTANCE_SAMPLES {
        let mut q = 1.0;
        for (slot, p) in x.iter_mut().zip(&proposals) {
            let (v, dens) = p.draw(&mut rng);
            *slot = v;
            q *= dens;
        }
        let w = lam(&x) / q;
        sum += w;
        sum_sq += w * w;
    }
    let n = IMPORTANCE_SAMPLES as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(MeasureEstimate {
        value: mean,
        abs_error: libm::sqrt(var / n),
        method: MeasureMethod::ImportanceSampling,
    })
}

/// Checks `μ(t^E B) = t^{−ρ} μ(B)` on each grid scale. Ratios are
/// `μ(t^E B)/μ(B)`, targets `t^{−ρ}`; passes when the largest relative
/// error is within `tolerance`. The slope field holds the fitted exponent
/// when the grid has enough points.
pub fn scaling_exponent_check(
    m: &LiouvilleModel,
    s: &ScalingSpec,
    b: &BoxRegion,
    t_grid: &[f64],
    tolerance: f64,
) -> Result<ConvergenceReport> {
    check_grid(t_grid)?;
    let base = limiting_measure(m, s, b)?;
    if !base.is_finite() {
        return Err(Error::Divergent("μ(B) is infinite".into()));
    }
    if !(base > 0.0) {
        return Err(Error::Numerical(format!("μ(B) = {base} is not positive")));
    }
    let mut ratios = Vec::with_capacity(t_grid.len());
    let mut targets = Vec::with_capacity(t_grid.len());
    let mut exponents = Vec::new();
    for &t in t_grid {
        let scaled = limiting_measure(m, s, &b.scaled(t, s.exponents()))?;
        let ratio = scaled / base;
        ratios.push(ratio);
        targets.push(libm::pow(t, -s.rho()));
        if t != 1.0 {
            exponents.push(libm::log(ratio) / libm::log(t));
        }
    }
    let mut report =
        ConvergenceReport::from_curve(t_grid.to_vec(), ratios, targets, tolerance, Vec::new())?;
    report.passed = report.max_rel_error < tolerance;
    let worst_exponent = exponents
        .iter()
        .map(|&e| relative_error(e, -s.rho()))
        .fold(0.0, f64::max);
    report.diagnostics.push(format!(
        "μ(B) = {base}; max relative error of the pointwise exponent vs {}: {worst_exponent:e}",
        -s.rho()
    ));
    Ok(report)
}
