use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A driving function given by knots `(t_k, g_k)`, interpolated linearly in
/// `log g`. Below the first knot the value is held constant; past the last
/// knot it continues as a power law with the log-log slope of the final
/// segment.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedFunction {
    t: Vec<f64>,
    ln_g: Vec<f64>,
    tail_slope: f64,
}

impl TabulatedFunction {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("table", "need at least two knots"));
        }
        let mut t = Vec::with_capacity(points.len());
        let mut ln_g = Vec::with_capacity(points.len());
        for (i, &(ti, gi)) in points.iter().enumerate() {
            if !ti.is_finite() || !gi.is_finite() {
                return Err(Error::NonFinite("table knot"));
            }
            if ti < 0.0 {
                return Err(Error::invalid("table", "abscissae must be nonnegative"));
            }
            if gi <= 0.0 {
                return Err(Error::invalid("table", "values must be positive for log interpolation"));
            }
            if i > 0 && ti <= t[i - 1] {
                return Err(Error::invalid("table", "abscissae must be strictly increasing"));
            }
            t.push(ti);
            ln_g.push(libm::log(gi));
        }
        let n = t.len();
        let tail_slope = if t[n - 2] > 0.0 {
            (ln_g[n - 1] - ln_g[n - 2]) / (libm::log(t[n - 1]) - libm::log(t[n - 2]))
        } else {
            0.0
        };
        Ok(TabulatedFunction { t, ln_g, tail_slope })
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().zip(&self.ln_g).map(|(&t, &l)| (t, libm::exp(l)))
    }

    /// Log-log slope used beyond the last knot.
    pub fn tail_slope(&self) -> f64 {
        self.tail_slope
    }

    pub fn ln_value(&self, x: f64) -> f64 {
        let n = self.t.len();
        if x <= self.t[0] {
            return self.ln_g[0];
        }
        if x >= self.t[n - 1] {
            let last = self.t[n - 1];
            return self.ln_g[n - 1] + self.tail_slope * (libm::log(x) - libm::log(last));
        }
        let k = self.t.partition_point(|&ti| ti <= x) - 1;
        let w = (x - self.t[k]) / (self.t[k + 1] - self.t[k]);
        self.ln_g[k] + w * (self.ln_g[k + 1] - self.ln_g[k])
    }
}
