//! Multivariate Liouville laws `L_d[g; a_1, …, a_d]` with density
//! `κ · g(Σx_i) · ∏ x_i^{a_i−1}` on the open positive orthant.

mod conditional;
mod radial;
mod sample;

use alloc::format;
use alloc::vec::Vec;

pub use conditional::{
    condition, conditional_h_expectation, conditional_moment_ratio, ConditionalModel,
};
pub use radial::{InverseCdfTable, RadialSampler, SPLINE_KNOTS};
pub use sample::{sample, stream_rng, LiouvilleSampler, SampleBatch, BLOCK_SIZE};

use crate::driving::{integrability_check, DrivingFunction};
use crate::error::{Error, Result};
use crate::special::ln_gamma;

/// Tolerance on `κ·(∏Γ(a_i)/Γ(Σa_i))·∫t^{Σa_i−1}g = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleModel {
    shapes: Vec<f64>,
    driving: DrivingFunction,
    kappa: f64,
    shape_sum: f64,
    radial_moment: f64,
}

impl LiouvilleModel {
    /// Builds the model and computes
    /// `κ = Γ(Σa_i) / (∏Γ(a_i) · ∫₀^∞ t^{Σa_i−1} g(t) dt)`.
    pub fn normalize(shapes: Vec<f64>, driving: DrivingFunction) -> Result<Self> {
        if shapes.is_empty() {
            return Err(Error::invalid("shapes", "need at least one shape parameter"));
        }
        if let Some(bad) = shapes.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::invalid("shapes", format!("must be positive and finite, got {bad}")));
        }
        let shape_sum: f64 = shapes.iter().sum();
        let integral = integrability_check(&driving, shape_sum)?;
        if !integral.finite {
            return Err(Error::Divergent(format!(
                "∫ t^(A-1) g(t) dt diverges for A = Σa_i = {shape_sum} and {} driving function{}",
                driving.family().name(),
                driving
                    .rv_index()
                    .map(|r| format!(" with tail index {}", -r))
                    .unwrap_or_default()
            )));
        }
        if !(integral.value > 0.0) {
            return Err(Error::Numerical(format!(
                "normalizing integral is not positive ({})",
                integral.value
            )));
        }
        let ln_prod_gamma: f64 = shapes.iter().map(|&a| ln_gamma(a)).sum();
        let kappa = libm::exp(ln_gamma(shape_sum) - ln_prod_gamma - libm::log(integral.value));
        let check = kappa * libm::exp(ln_prod_gamma - ln_gamma(shape_sum)) * integral.value;
        if !kappa.is_finite() || (check - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Numerical(format!("normalization check failed ({check})")));
        }
        Ok(LiouvilleModel {
            shapes,
            driving,
            kappa,
            shape_sum,
            radial_moment: integral.value,
        })
    }

    pub fn shapes(&self) -> &[f64] {
        &self.shapes
    }

    pub fn driving(&self) -> &DrivingFunction {
        &self.driving
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.shapes.len()
    }

    pub fn shape_sum(&self) -> f64 {
        self.shape_sum
    }

    /// `∫₀^∞ t^{Σa_i−1} g(t) dt`.
    pub fn radial_moment(&self) -> f64 {
        self.radial_moment
    }

    /// Density at `x`. Zero outside the closed orthant; on a coordinate
    /// hyperplane the continuous extension is used when it exists
    /// (`a_i ≥ 1`), and `a_i < 1` at `x_i = 0` is an error.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("density argument"));
        }
        if x.iter().any(|&v| v < 0.0) {
            return Ok(0.0);
        }
        let mut product = 1.0;
        for (&xi, &a) in x.iter().zip(&self.shapes) {
            if xi == 0.0 {
                if a < 1.0 {
                    return Err(Error::Domain(format!(
                        "density diverges at x_i = 0 for shape a_i = {a} < 1"
                    )));
                }
                if a > 1.0 {
                    return Ok(0.0);
                }
            } else if a != 1.0 {
                product *= libm::pow(xi, a - 1.0);
            }
        }
        let total: f64 = x.iter().sum();
        Ok(self.kappa * self.driving.value(total) * product)
    }

    /// `log f(x)` for strictly positive `x`.
    pub fn ln_density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        if x.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain("log-density needs strictly positive finite x".into()));
        }
        let total: f64 = x.iter().sum();
        let ln_prod: f64 = x
            .iter()
            .zip(&self.shapes)
            .map(|(&xi, &a)| (a - 1.0) * libm::log(xi))
            .sum();
        Ok(libm::log(self.kappa) + self.driving.ln_value(total) + ln_prod)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Law of `(X_1, …, X_r)`: `L_r[W^a g; a_1, …, a_r]` with `a = Σ_{i>r} a_i`.
pub fn marginal(m: &LiouvilleModel, r: usize) -> Result<LiouvilleModel> {
    if r == 0 || r >= m.dim() {
        return Err(Error::invalid(
            "r",
            format!("marginal needs 1 <= r < d = {}, got {r}", m.dim()),
        ));
    }
    let removed: f64 = m.shapes[r..].iter().sum();
    let driving = m.driving.weyl_transform(removed)?;
    LiouvilleModel::normalize(m.shapes[..r].to_vec(), driving)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn reference() -> LiouvilleModel {
        LiouvilleModel::normalize(vec![1.0, 1.0], DrivingFunction::inverted_dirichlet(3.0).unwrap())
            .unwrap()
    }

    #[test]
    fn reference_kappa() {
        assert!((reference().kappa() - 2.0).abs() < 2e-8);
    }

    #[test]
    fn exponential_one_dimensional_kappa() {
        let m = LiouvilleModel::normalize(vec![1.0], DrivingFunction::exponential(1.0).unwrap())
            .unwrap();
        assert!((m.kappa() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn divergent_boundary_rejected() {
        let err =
            LiouvilleModel::normalize(vec![1.0, 1.0], DrivingFunction::inverted_dirichlet(2.0).unwrap())
                .unwrap_err();
        assert!(matches!(err, Error::Divergent(_)));
        assert!(LiouvilleModel::normalize(vec![], DrivingFunction::exponential(1.0).unwrap()).is_err());
        assert!(
            LiouvilleModel::normalize(vec![1.0, -1.0], DrivingFunction::exponential(1.0).unwrap())
                .is_err()
        );
    }

    #[test]
    fn density_examples() {
        let m = reference();
        assert!((m.density(&[1.0, 1.0]).unwrap() - 2.0 / 27.0).abs() < 1e-9);
        // boundary with a_i = 1 uses the continuous extension
        assert!((m.density(&[0.0, 1.0]).unwrap() - 2.0 * 0.125).abs() < 1e-9);
        assert_eq!(m.density(&[-1.0, 1.0]).unwrap(), 0.0);
        assert!(m.density(&[1.0]).is_err());

        // inverted Dirichlet d = 2, a = (2, 1), a_3 = 1 → β = 4
        let id = LiouvilleModel::normalize(vec![2.0, 1.0], DrivingFunction::inverted_dirichlet(4.0).unwrap())
            .unwrap();
        assert!((id.density(&[1.0, 1.0]).unwrap() - 6.0 / 81.0).abs() < 1e-9);
        assert_eq!(id.density(&[0.0, 1.0]).unwrap(), 0.0);

        let small = LiouvilleModel::normalize(vec![0.5, 1.0], DrivingFunction::inverted_dirichlet(3.0).unwrap())
            .unwrap();
        assert!(matches!(small.density(&[0.0, 1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn ln_density_agrees() {
        let m = reference();
        for x in [[0.3, 2.0], [5.0, 7.0], [100.0, 0.01]] {
            let d = m.density(&x).unwrap();
            assert!((libm::exp(m.ln_density(&x).unwrap()) - d).abs() < 1e-13 * d);
        }
    }

    #[test]
    fn marginal_of_reference() {
        let m = reference();
        let marg = marginal(&m, 1).unwrap();
        assert_eq!(marg.shapes(), &[1.0]);
        // W¹g = (1/2)(1+t)^{-2}; normalized density (1+t)^{-2}
        let d = marg.density(&[1.0]).unwrap();
        assert!((d - 0.25).abs() < 1e-9);
        assert!(marginal(&m, 2).is_err());
        assert!(marginal(&m, 0).is_err());
    }
}
