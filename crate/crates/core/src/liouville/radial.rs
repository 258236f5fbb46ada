//! Samplers for the radial part `R = ΣX_i`, whose density is proportional
//! to `r^{A−1} g(r)` with `A = Σa_i`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::driving::DrivingFunction;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

pub const SPLINE_KNOTS: usize = 2048;

/// Decades covered on either side of the table's center scale.
const HALF_RANGE_DECADES: f64 = 12.0;

#[derive(Debug, Clone, PartialEq)]
pub enum RadialSampler {
    /// Beta-prime with `β − A = 1`: `B = U^{1/A}`, `R = B/(1−B)`.
    BetaPrimePower { shape: f64 },
    /// Beta-prime with `A = 1`: `B = 1 − (1−U)^{1/(β−1)}`.
    BetaPrimeUnitShape { tail: f64 },
    /// Exponential driving with `A = 1`: `R = −log(1−U)/rate`.
    Exponential { rate: f64 },
    /// Everything else: monotone cubic inverse-CDF table.
    Spline(InverseCdfTable),
}

fn is_integer_like(x: f64, target: f64) -> bool {
    (x - target).abs() <= 1e-12 * target.abs().max(1.0)
}

impl RadialSampler {
    pub fn new(driving: &DrivingFunction, shape_sum: f64) -> Result<Self> {
        let base = match driving {
            DrivingFunction::Shifted { base, shift, .. } if *shift == 0.0 => base.as_ref(),
            other => other,
        };
        match *base {
            DrivingFunction::InvertedDirichlet { beta } if is_integer_like(beta - shape_sum, 1.0) => {
                return Ok(RadialSampler::BetaPrimePower { shape: shape_sum });
            }
            DrivingFunction::InvertedDirichlet { beta }
                if is_integer_like(shape_sum, 1.0) && beta > 1.0 =>
            {
                return Ok(RadialSampler::BetaPrimeUnitShape { tail: beta - 1.0 });
            }
            DrivingFunction::Exponential { rate } if is_integer_like(shape_sum, 1.0) => {
                return Ok(RadialSampler::Exponential { rate });
            }
            _ => {}
        }
        let center = match *base {
            DrivingFunction::Exponential { rate } => shape_sum / rate,
            _ => 1.0,
        };
        let ln_density = |r: f64| (shape_sum - 1.0) * libm::log(r) + driving.ln_value(r);
        Ok(RadialSampler::Spline(InverseCdfTable::build(
            ln_density, shape_sum, center,
        )?))
    }

    /// Maps `u ∈ (0, 1)` to a radius.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        match self {
            RadialSampler::BetaPrimePower { shape } => {
                let b = libm::pow(u, 1.0 / shape);
                b / (1.0 - b)
            }
            RadialSampler::BetaPrimeUnitShape { tail } => {
                // 1 − B = (1−U)^{1/tail}; R = B/(1−B)
                let one_minus_b = libm::pow(1.0 - u, 1.0 / tail);
                (1.0 - one_minus_b) / one_minus_b
            }
            RadialSampler::Exponential { rate } => -libm::log1p(-u) / rate,
            RadialSampler::Spline(table) => table.inverse(u),
        }
    }

    pub fn cdf(&self, r: f64) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        match self {
            RadialSampler::BetaPrimePower { shape } => libm::pow(r / (1.0 + r), *shape),
            RadialSampler::BetaPrimeUnitShape { tail } => 1.0 - libm::pow(1.0 + r, -tail),
            RadialSampler::Exponential { rate } => -libm::expm1(-rate * r),
            RadialSampler::Spline(table) => table.cdf(r),
        }
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self, RadialSampler::Spline(_))
    }
}

/// Tabulated radial CDF on a geometric grid with analytic power-law
/// continuation below the first and above the last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseCdfTable {
    ln_r: Vec<f64>,
    cdf: Vec<f64>,
    /// `1 − F`, accumulated from the top so tail probabilities keep full
    /// relative precision.
    survival: Vec<f64>,
    /// `dF/d(log r)` at each knot (normalized).
    slope: Vec<f64>,
    head_exponent: f64,
    tail_exponent: f64,
}

impl InverseCdfTable {
    /// `ln_density` is the unnormalized log radial density; `head_exponent`
    /// is `A` (density `∝ r^{A−1}` near zero).
    pub fn build<F: Fn(f64) -> f64>(ln_density: F, head_exponent: f64, center: f64) -> Result<Self> {
        let k = SPLINE_KNOTS;
        let lo = libm::log(center) - HALF_RANGE_DECADES * core::f64::consts::LN_10;
        let hi = libm::log(center) + HALF_RANGE_DECADES * core::f64::consts::LN_10;
        let step = (hi - lo) / (k - 1) as f64;
        let ln_r: Vec<f64> = (0..k).map(|i| lo + step * i as f64).collect();

        // mass density in log r: p(r)·r
        let log_mass = |v: f64| ln_density(libm::exp(v)) + v;
        let opts = QuadOptions::default()
            .with_rel_tol(1e-12)
            .with_abs_tol(0.0)
            .with_max_intervals(64);

        let head = libm::exp(log_mass(ln_r[0])) / head_exponent;
        let ln_last = log_mass(ln_r[k - 1]);
        let tail_exponent = -(ln_last - log_mass(ln_r[k - 2])) / step;
        let tail = if ln_last == f64::NEG_INFINITY || libm::exp(ln_last) == 0.0 {
            0.0
        } else if tail_exponent > 0.0 {
            libm::exp(ln_last) / tail_exponent
        } else {
            return Err(Error::Numerical(format!(
                "radial density does not decay at r = {:e}; CDF table cannot be built",
                libm::exp(ln_r[k - 1])
            )));
        };

        let mut segments = Vec::with_capacity(k - 1);
        for i in 0..k - 1 {
            let seg = integrate(|v| libm::exp(log_mass(v)), ln_r[i], ln_r[i + 1], opts);
            if !seg.value.is_finite() {
                return Err(Error::Numerical("non-finite radial CDF segment".into()));
            }
            segments.push(seg.value);
        }
        let mut cumulative = Vec::with_capacity(k);
        let mut acc = head;
        cumulative.push(acc);
        for s in &segments {
            acc += s;
            cumulative.push(acc);
        }
        let mut upper = vec![0.0; k];
        let mut acc_upper = tail;
        upper[k - 1] = acc_upper;
        for i in (0..k - 1).rev() {
            acc_upper += segments[i];
            upper[i] = acc_upper;
        }
        let total = acc + tail;
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Numerical(format!("radial normalizer is {total}")));
        }
        let cdf: Vec<f64> = cumulative.iter().map(|c| c / total).collect();
        let survival: Vec<f64> = upper.iter().map(|c| c / total).collect();
        let slope: Vec<f64> = ln_r.iter().map(|&v| libm::exp(log_mass(v)) / total).collect();
        Ok(InverseCdfTable {
            ln_r,
            cdf,
            survival,
            slope,
            head_exponent,
            tail_exponent,
        })
    }

    pub fn cdf(&self, r: f64) -> f64 {
        let v = libm::log(r);
        if v <= self.ln_r[0] {
            return self.cdf[0] * libm::exp(self.head_exponent * (v - self.ln_r[0]));
        }
        if v < self.ln_r[self.ln_r.len() - 1] {
            let i = self.segment(v);
            if self.cdf[i + 1] <= 0.5 {
                return self.lower(v, i);
            }
        }
        1.0 - self.survival_at(v)
    }

    fn segment(&self, v: f64) -> usize {
        (self.ln_r.partition_point(|&x| x <= v) - 1).min(self.ln_r.len() - 2)
    }

    fn lower(&self, v: f64, i: usize) -> f64 {
        let (x0, x1) = (self.ln_r[i], self.ln_r[i + 1]);
        let (y0, y1) = (self.cdf[i], self.cdf[i + 1]);
        hermite(v, x0, x1, y0, y1, self.slope[i], self.slope[i + 1]).clamp(y0, y1)
    }

    /// `1 − F(r)`.
    pub fn survival(&self, r: f64) -> f64 {
        let v = libm::log(r);
        if v <= self.ln_r[0] {
            return 1.0 - self.cdf(r);
        }
        self.survival_at(v)
    }

    fn survival_at(&self, v: f64) -> f64 {
        let k = self.ln_r.len();
        if v >= self.ln_r[k - 1] {
            return self.survival[k - 1] * libm::exp(-self.tail_exponent * (v - self.ln_r[k - 1]));
        }
        let i = self.segment(v);
        let (x0, x1) = (self.ln_r[i], self.ln_r[i + 1]);
        if self.cdf[i + 1] <= 0.5 {
            1.0 - self.lower(v, i)
        } else {
            let (s0, s1) = (self.survival[i], self.survival[i + 1]);
            if !(s1 > 0.0) {
                return s0 * libm::exp(-(v - x0) * self.slope[i] / s0).min(1.0);
            }
            // ln S is far smoother than S in the upper tail
            let (y0, y1) = (libm::log(s0), libm::log(s1));
            let m0 = -self.slope[i] / s0;
            let m1 = -self.slope[i + 1] / s1;
            libm::exp(hermite(v, x0, x1, y0, y1, m0, m1).clamp(y1, y0))
        }
    }

    pub fn inverse(&self, u: f64) -> f64 {
        let k = self.ln_r.len();
        if u <= self.cdf[0] {
            let v = self.ln_r[0] + libm::log(u / self.cdf[0]) / self.head_exponent;
            return libm::exp(v);
        }
        let remaining = 1.0 - u;
        if remaining <= self.survival[k - 1] {
            let tail = self.survival[k - 1];
            if tail <= 0.0 || self.tail_exponent <= 0.0 || remaining <= 0.0 {
                return libm::exp(self.ln_r[k - 1]);
            }
            let v = self.ln_r[k - 1] - libm::log(remaining / tail) / self.tail_exponent;
            return libm::exp(v);
        }
        let (i, x, x0, x1) = if u <= 0.5 {
            let i = (self.cdf.partition_point(|&c| c <= u) - 1).min(k - 2);
            (i, u, self.cdf[i], self.cdf[i + 1])
        } else {
            // survival is decreasing; search on its negation
            let i = (self.survival.partition_point(|&s| s >= remaining)).clamp(1, k - 1) - 1;
            (i, -libm::log(remaining), -libm::log(self.survival[i]), -libm::log(self.survival[i + 1]))
        };
        let (v0, v1) = (self.ln_r[i], self.ln_r[i + 1]);
        if x1 <= x0 {
            return libm::exp(v0);
        }
        let (m0, m1) = if u <= 0.5 {
            (1.0 / self.slope[i], 1.0 / self.slope[i + 1])
        } else {
            (
                self.survival[i] / self.slope[i],
                self.survival[i + 1] / self.slope[i + 1],
            )
        };
        let v = if m0.is_finite() && m1.is_finite() {
            hermite(x, x0, x1, v0, v1, m0, m1)
        } else {
            v0 + (v1 - v0) * (x - x0) / (x1 - x0)
        };
        libm::exp(v.clamp(v0, v1))
    }
}

/// Cubic Hermite through `(x0, y0)`, `(x1, y1)` with end slopes limited per
/// Fritsch–Carlson so the interpolant stays monotone.
fn hermite(x: f64, x0: f64, x1: f64, y0: f64, y1: f64, mut m0: f64, mut m1: f64) -> f64 {
    let h = x1 - x0;
    let delta = (y1 - y0) / h;
    if delta == 0.0 {
        return y0;
    }
    let a = m0 / delta;
    let b = m1 / delta;
    let norm = a * a + b * b;
    if norm > 9.0 {
        let tau = 3.0 / libm::sqrt(norm);
        m0 = tau * a * delta;
        m1 = tau * b * delta;
    }
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
}
