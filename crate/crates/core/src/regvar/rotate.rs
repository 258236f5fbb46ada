use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::operator_scaling::{power_matrix, OperatorIndex, SquareMatrix, DECOMPOSITION_TOL};

/// Evaluates the density ratio along `t^E` and along the diagonalized
/// scaling `t^D` applied to the rotated density `f*(y) = f(Oᵀy)`, where
/// `D = O E Oᵀ`. Returns `(f(t^E x) t^{tr E}/V(t), f*(t^D O x) t^{tr D}/V(t))`.
pub fn rotate_density_check<F, V>(
    f: F,
    o: &SquareMatrix,
    e: &OperatorIndex,
    x: &[f64],
    t: f64,
    v: V,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
    V: Fn(f64) -> f64,
{
    let n = e.dim();
    if o.dim() != n || x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if o.dim() != n { o.dim() } else { x.len() },
        });
    }
    let ot = o.transpose();
    let deviation = (o * &ot).max_abs_diff(&SquareMatrix::identity(n));
    if deviation > DECOMPOSITION_TOL {
        return Err(Error::NotOrthogonal(deviation));
    }
    let d = &(o * e.matrix()) * &ot;
    let scale = e.matrix().max_abs().max(1.0);
    let mut off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(d.get(i, j).abs());
            }
        }
    }
    if off > DECOMPOSITION_TOL * scale {
        return Err(Error::invalid(
            "o",
            format!("O E Oᵀ is not diagonal (largest off-diagonal entry {off:e})"),
        ));
    }
    let diag: Vec<f64> = (0..n).map(|i| d.get(i, i)).collect();
    let vt = v(t);
    if !(vt > 0.0) || !vt.is_finite() {
        return Err(Error::Domain(format!("V({t}) = {vt}; need positive")));
    }

    let direct = f(&power_matrix(e, t)?.apply(x)) * libm::pow(t, e.trace()) / vt;

    // same exp(λ log t) form as power_matrix, so O = I reproduces it exactly
    let lt = libm::log(t);
    let ox = o.apply(x);
    let scaled: Vec<f64> = ox
        .iter()
        .zip(&diag)
        .map(|(&y, &l)| libm::exp(l * lt) * y)
        .collect();
    let rotated = f(&ot.apply(&scaled)) * libm::pow(t, diag.iter().sum::<f64>()) / vt;
    Ok((direct, rotated))
}
