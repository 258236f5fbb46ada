//! Conditioning on the leading coordinates and the conditional moment
//! functionals built from Weyl integrals.

use alloc::format;
use alloc::vec::Vec;

use super::LiouvilleModel;
use crate::driving::{power_weighted_integral, weyl_integral, DrivingFunction};
use crate::error::{Error, Result};

/// Law of `(X_{r+1}, …, X_d)` given `X_i = x_i` for `i ≤ r`:
/// `L_{d−r}[g_r; a_{r+1}, …, a_d]` with
/// `g_r(t) = g(t + Σ_{i≤r} x_i) / W^a g(Σ_{i≤r} x_i)`, `a = Σ_{i>r} a_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalModel {
    pub base: LiouvilleModel,
    pub r: usize,
    pub fixed: Vec<f64>,
    /// `W^a g(Σ_{i≤r} x_i)`.
    pub normalizer: f64,
    pub model: LiouvilleModel,
}

impl ConditionalModel {
    pub fn conditioned_shape_sum(&self) -> f64 {
        self.base.shapes()[self.r..].iter().sum()
    }

    pub fn conditional_driving(&self) -> &DrivingFunction {
        self.model.driving()
    }

    pub fn density(&self, y: &[f64]) -> Result<f64> {
        self.model.density(y)
    }
}

fn check_split(m: &LiouvilleModel, r: usize) -> Result<f64> {
    if r == 0 || r >= m.dim() {
        return Err(Error::invalid(
            "r",
            format!("conditioning needs 1 <= r < d = {}, got {r}", m.dim()),
        ));
    }
    Ok(m.shapes()[r..].iter().sum())
}

pub fn condition(m: &LiouvilleModel, r: usize, fixed: &[f64]) -> Result<ConditionalModel> {
    let a = check_split(m, r)?;
    if fixed.len() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: fixed.len(),
        });
    }
    if fixed.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::invalid("fixed", "conditioning values must be positive and finite"));
    }
    let shift: f64 = fixed.iter().sum();
    let normalizer = weyl_integral(m.driving(), a, shift)?.value;
    if !(normalizer > 0.0) || !normalizer.is_finite() {
        return Err(Error::Numerical(format!(
            "W^a g({shift}) = {normalizer}; conditional law undefined"
        )));
    }
    let driving = m.driving().clone().shifted(shift, 1.0 / normalizer)?;
    let model = LiouvilleModel::normalize(m.shapes()[r..].to_vec(), driving)?;
    Ok(ConditionalModel {
        base: m.clone(),
        r,
        fixed: fixed.to_vec(),
        normalizer,
        model,
    })
}

/// `W^{j+a} g(t) / W^a g(t)` with `j = Σ j_i`, `a = Σ_{i>r} a_i`: the
/// conditional joint moment `E(∏_{i>r} X_i^{j_i} | Σ_{i≤r} X_i = t)` up to
/// a constant factor.
pub fn conditional_moment_ratio(m: &LiouvilleModel, r: usize, j: &[u32], t: f64) -> Result<f64> {
    let a = check_split(m, r)?;
    if j.len() != m.dim() - r {
        return Err(Error::DimensionMismatch {
            expected: m.dim() - r,
            got: j.len(),
        });
    }
    let j_sum: f64 = j.iter().map(|&v| v as f64).sum();
    let den = weyl_integral(m.driving(), a, t)?.value;
    if j_sum == 0.0 {
        return Ok(1.0);
    }
    let num = weyl_integral(m.driving(), a + j_sum, t)?.value;
    if !(den > 0.0) {
        return Err(Error::Numerical(format!("W^a g({t}) = {den}")));
    }
    Ok(num / den)
}

/// `∫_t^∞ (y−t)^{a−1} h(y−t) g(y) dy / W^a g(t)`: the conditional
/// expectation `E(h(Σ_{i>r} X_i) | Σ_{i≤r} X_i = t)` up to a constant.
pub fn conditional_h_expectation(
    m: &LiouvilleModel,
    r: usize,
    h: &DrivingFunction,
    t: f64,
) -> Result<f64> {
    let a = check_split(m, r)?;
    let gamma = h.tail_index()?;
    let beta = m.driving().tail_index()?;
    if a >= gamma + beta {
        return Err(Error::Divergent(format!(
            "∫ (y−t)^(a−1) h(y−t) g(y) dy diverges (a = {a}, γ = {gamma}, β = {beta})"
        )));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t must be nonnegative, got {t}")));
    }
    let g = m.driving();
    let num = power_weighted_integral(|y| h.value(y) * g.value(t + y), a, t.max(1.0));
    if !num.converged {
        return Err(Error::Numerical(format!(
            "h-expectation quadrature did not converge at t = {t}"
        )));
    }
    let den = weyl_integral(g, a, t)?.value;
    Ok(num.value / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;
    use alloc::vec;

    fn reference(beta: f64) -> LiouvilleModel {
        LiouvilleModel::normalize(vec![1.0, 1.0], DrivingFunction::inverted_dirichlet(beta).unwrap())
            .unwrap()
    }

    #[test]
    fn conditional_driving_of_reference() {
        let c = condition(&reference(3.0), 1, &[1.0]).unwrap();
        // g_1(t) = (2+t)^{-3} / W¹g(1) = 8(2+t)^{-3}
        for &t in &[0.0, 1.0, 5.0] {
            let expect = 8.0 * libm::pow(2.0 + t, -3.0);
            let got = c.conditional_driving().value(t);
            assert!((got - expect).abs() < 1e-14 * expect);
        }
        assert_eq!(c.conditional_driving().rv_index(), Some(-3.0));
        // conditional κ = 1/∏Γ(a_i) = 1
        assert!((c.model.kappa() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn condition_validates() {
        let m = reference(3.0);
        assert!(condition(&m, 1, &[0.0]).is_err());
        assert!(condition(&m, 1, &[1.0, 2.0]).is_err());
        assert!(condition(&m, 2, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn moment_ratio_closed_form() {
        let m = reference(5.0);
        assert_eq!(conditional_moment_ratio(&m, 1, &[0], 3.0).unwrap(), 1.0);
        for &t in &[0.0, 1.0, 10.0, 1e4] {
            let got = conditional_moment_ratio(&m, 1, &[1], t).unwrap();
            let expect = (1.0 + t) / 3.0;
            assert!((got - expect).abs() < 1e-12 * expect, "t = {t}");
        }
        // j + a = β − ... : j = 4 makes a + j = 5 = β
        assert!(matches!(
            conditional_moment_ratio(&m, 1, &[4], 1.0),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn h_expectation_constant_h() {
        let m = reference(5.0);
        let one = DrivingFunction::inverted_dirichlet(0.0).unwrap();
        for &t in &[0.0, 3.0, 100.0] {
            let v = conditional_h_expectation(&m, 1, &one, t).unwrap();
            assert!((v - gamma(1.0)).abs() < 1e-9, "t = {t}: {v}");
        }
        let e = DrivingFunction::exponential(1.0).unwrap();
        assert_eq!(
            conditional_h_expectation(&m, 1, &e, 1.0),
            Err(Error::NotRegularlyVarying)
        );
    }
}
