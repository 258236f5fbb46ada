//! Matrix exponentials, power matrices `t^E`, and the quasi-homogeneous
//! gauge that linearizes diagonal operator scaling.

mod matrix;
mod spectral;

use alloc::format;
use alloc::vec::Vec;

pub use matrix::SquareMatrix;
pub use spectral::{spectral_decompose, SpectralDecomposition, DECOMPOSITION_TOL, SYMMETRY_TOL};

use crate::error::{Error, Result};

/// A symmetric positive-definite scaling operator `E` with its cached
/// spectral decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorIndex {
    matrix: SquareMatrix,
    decomposition: SpectralDecomposition,
    trace: f64,
}

impl OperatorIndex {
    pub fn new(matrix: SquareMatrix) -> Result<Self> {
        let decomposition = spectral_decompose(&matrix)?;
        let smallest = decomposition.eigenvalues()[0];
        if smallest <= 0.0 {
            return Err(Error::NotPositiveDefinite(smallest));
        }
        let trace = matrix.trace();
        let eig_sum: f64 = decomposition.eigenvalues().iter().sum();
        if (trace - eig_sum).abs() > DECOMPOSITION_TOL * trace.abs().max(1.0) {
            return Err(Error::Numerical(format!(
                "trace {trace} disagrees with eigenvalue sum {eig_sum}"
            )));
        }
        Ok(OperatorIndex {
            matrix,
            decomposition,
            trace,
        })
    }

    pub fn diagonal(exponents: &[f64]) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::invalid("exponents", "must be non-empty"));
        }
        if exponents.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("exponents"));
        }
        Self::new(SquareMatrix::diagonal(exponents))
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&alloc::vec![1.0; dim]).expect("identity is positive definite")
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.decomposition.eigenvalues()
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// `Σ_k A^k / k!`.
///
/// Symmetric input goes through the eigendecomposition; anything else uses
/// scaling and squaring around a Taylor polynomial.
pub fn matrix_exponential(a: &SquareMatrix) -> Result<SquareMatrix> {
    let scale = a.max_abs().max(1.0);
    if a.asymmetry() <= SYMMETRY_TOL * scale {
        let d = spectral_decompose(a)?;
        return Ok(d.map_eigenvalues(libm::exp));
    }
    Ok(taylor_exponential(a))
}

fn taylor_exponential(a: &SquareMatrix) -> SquareMatrix {
    let n = a.dim();
    let norm = a.norm_one();
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = libm::ceil(libm::log2(norm / 0.5)).max(0.0) as u32;
    }
    let reduced = a.scaled(libm::pow(2.0, -(squarings as f64)));
    let mut result = SquareMatrix::identity(n);
    let mut term = SquareMatrix::identity(n);
    for k in 1..=40 {
        term = (&term * &reduced).scaled(1.0 / k as f64);
        result = result.add(&term);
        if term.max_abs() <= f64::EPSILON * 1e-2 * result.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `t^E = exp(E·log t) = Oᵀ·DIAG(t^{λ_i})·O`.
pub fn power_matrix(e: &OperatorIndex, t: f64) -> Result<SquareMatrix> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("power matrix requires t > 0, got {t}")));
    }
    let log_t = libm::log(t);
    Ok(e.decomposition.map_eigenvalues(|l| libm::exp(l * log_t)))
}

/// Quasi-homogeneous gauge `[x] = Σ |x_i|^{1/λ_i}`; satisfies
/// `[t^D x] = t[x]` for `D = DIAG(λ_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gauge {
    exponents: Vec<f64>,
}

impl Gauge {
    pub fn new(exponents: Vec<f64>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::invalid("exponents", "must be non-empty"));
        }
        if exponents.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::invalid("exponents", "must be positive and finite"));
        }
        Ok(Gauge { exponents })
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.exponents.len() {
            return Err(Error::DimensionMismatch {
                expected: self.exponents.len(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gauge argument"));
        }
        Ok(x.iter()
            .zip(&self.exponents)
            .map(|(xi, l)| {
                if *l == 1.0 {
                    xi.abs()
                } else {
                    libm::pow(xi.abs(), 1.0 / l)
                }
            })
            .sum())
    }
}
