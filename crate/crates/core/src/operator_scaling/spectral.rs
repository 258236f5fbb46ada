use alloc::format;
use alloc::vec::Vec;

use super::matrix::SquareMatrix;
use crate::error::{Error, Result};

/// Symmetry tolerance applied before decomposing.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Orthogonality and reconstruction tolerance, relative to `max(1, max|m_ij|)`.
pub const DECOMPOSITION_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

/// `M = Oᵀ · DIAG(λ) · O` with `O` orthogonal. Rows of `O` are the
/// eigenvectors; eigenvalues ascend and the first nonzero component of each
/// eigenvector is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    orthogonal: SquareMatrix,
    eigenvalues: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn orthogonal(&self) -> &SquareMatrix {
        &self.orthogonal
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `Oᵀ · DIAG(φ(λ_i)) · O`.
    pub fn map_eigenvalues(&self, mut phi: impl FnMut(f64) -> f64) -> SquareMatrix {
        let n = self.eigenvalues.len();
        let mapped: Vec<f64> = self.eigenvalues.iter().map(|&l| phi(l)).collect();
        let o = &self.orthogonal;
        let mut out = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..n).map(|k| o.get(k, i) * mapped[k] * o.get(k, j)).sum();
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        out
    }

    pub fn reconstruct(&self) -> SquareMatrix {
        self.map_eigenvalues(|l| l)
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
pub fn spectral_decompose(m: &SquareMatrix) -> Result<SpectralDecomposition> {
    let n = m.dim();
    let scale = m.max_abs().max(1.0);
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(asym));
    }
    // symmetrize away sub-tolerance noise
    let mut a = m.add(&m.transpose()).scaled(0.5);
    let mut v = SquareMatrix::identity(n);

    let off = |a: &SquareMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a.get(i, j) * a.get(i, j);
            }
        }
        s
    };
    let frob: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a.get(i, j) * a.get(i, j))
        .sum();

    let mut converged = n == 1;
    for _ in 0..MAX_SWEEPS {
        if off(&a) <= f64::EPSILON * f64::EPSILON * frob {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    if !converged && off(&a) > 1e-20 * frob.max(f64::MIN_POSITIVE) {
        return Err(Error::Numerical(format!(
            "Jacobi iteration did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| a.get(k, k)).collect();
    let mut orthogonal = SquareMatrix::zeros(n);
    for (row, &k) in order.iter().enumerate() {
        let lead = (0..n)
            .map(|i| v.get(i, k))
            .find(|x| x.abs() > 1e-12)
            .unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            orthogonal.set(row, i, sign * v.get(i, k));
        }
    }

    let decomposition = SpectralDecomposition {
        orthogonal,
        eigenvalues,
    };
    let ortho_err = (&decomposition.orthogonal * &decomposition.orthogonal.transpose())
        .max_abs_diff(&SquareMatrix::identity(n));
    if ortho_err > DECOMPOSITION_TOL {
        return Err(Error::Numerical(format!(
            "eigenvector matrix not orthogonal (deviation {ortho_err:e})"
        )));
    }
    let recon_err = decomposition.reconstruct().max_abs_diff(m);
    if recon_err > DECOMPOSITION_TOL * scale {
        return Err(Error::Numerical(format!(
            "reconstruction error {recon_err:e} exceeds tolerance"
        )));
    }
    Ok(decomposition)
}
