//! Gamma-family helpers on top of `libm`.

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Euler beta function `B(a, b)`, evaluated in log space for stability.
pub fn beta(a: f64, b: f64) -> f64 {
    libm::exp(ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))
}

/// `Γ(a) / Γ(b)` without overflowing for large arguments.
pub fn gamma_ratio(a: f64, b: f64) -> f64 {
    if a < 20.0 && b < 20.0 {
        gamma(a) / gamma(b)
    } else {
        libm::exp(ln_gamma(a) - ln_gamma(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_gammas() {
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma(0.5) - core::f64::consts::PI.sqrt()).abs() < 1e-14);
        assert!((beta(2.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((gamma_ratio(3.0, 5.0) - 1.0 / 12.0).abs() < 1e-15);
        assert!((gamma_ratio(40.0, 41.0) - 1.0 / 40.0).abs() < 1e-12);
    }
}
