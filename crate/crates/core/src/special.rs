//! Special functions used by the explicit integral formulas.

use crate::scalar::{r64, Real};

/// Volume of the unit ball in `ℝⁿ`: `π^{n/2} / Γ(n/2 + 1)`.
pub fn ball_volume<R: Real>(n: usize) -> R {
    assert!(n >= 1);
    let half_n = r64::<R>(n as f64 / 2.0);
    (half_n * R::pi().ln() - (half_n + R::one()).ln_gamma()).exp()
}

/// Log of the multivariate gamma function
/// `Γ_m(a) = π^{m(m−1)/4} ∏_{j=0}^{m−1} Γ(a − j/2)`.
pub fn ln_gamma_multi<R: Real>(m: usize, a: R) -> R {
    let mut acc = r64::<R>(m as f64 * (m as f64 - 1.0) / 4.0) * R::pi().ln();
    for j in 0..m {
        acc += (a - r64::<R>(j as f64 / 2.0)).ln_gamma();
    }
    acc
}

/// Modified Bessel function `I₁(x)` for `|x| ≤ 3.75`
/// (Abramowitz–Stegun 9.8.3).
fn bessel_i1_small(x: f64) -> f64 {
    let t = (x / 3.75) * (x / 3.75);
    x * (0.5
        + t * (0.87890594
            + t * (0.51498869
                + t * (0.15084934 + t * (0.02658733 + t * (0.00301532 + t * 0.00032411))))))
}

/// Modified Bessel function of the second kind `K₁(x)`, `x > 0`
/// (Abramowitz–Stegun 9.8.7 / 9.8.8; ~7 digits).
pub fn bessel_k1(x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k1 needs x > 0");
    if x <= 2.0 {
        let t = (x / 2.0) * (x / 2.0);
        let poly = 1.0
            + t * (0.15443144
                + t * (-0.67278579
                    + t * (-0.18156897
                        + t * (-0.01919402 + t * (-0.00110404 + t * (-0.00004686))))));
        (x / 2.0).ln() * bessel_i1_small(x) + poly / x
    } else {
        let s = 2.0 / x;
        let poly = 1.25331414
            + s * (0.23498619
                + s * (-0.03655620
                    + s * (0.01504268 + s * (-0.00780353 + s * (0.00325614 + s * (-0.00068245))))));
        poly * (-x).exp() / x.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    #[test]
    fn ball_volumes() {
        let pi = std::f64::consts::PI;
        assert!((ball_volume::<f64>(1) - 2.0).abs() < 1e-12);
        assert!((ball_volume::<f64>(2) - pi).abs() < 1e-12);
        assert!((ball_volume::<f64>(3) - 4.0 * pi / 3.0).abs() < 1e-12);
        assert!((ball_volume::<f64>(12) - pi.powi(6) / 720.0).abs() < 1e-9);
    }

    #[test]
    fn k1_against_integral_representation() {
        // K₁(z) = ∫₀^∞ e^{-z cosh t} cosh t dt
        for z in [0.5f64, 1.0, 2.0, 3.0, 2.0 * std::f64::consts::PI] {
            let (quad, _) = integrate(|t: f64| (-z * t.cosh()).exp() * t.cosh(), 0.0, 30.0, 1e-12);
            let poly = bessel_k1(z);
            assert!(
                (quad - poly).abs() <= 3e-7 * quad.abs().max(1e-30),
                "z={z}: quad {quad} vs poly {poly}"
            );
        }
    }

    #[test]
    fn gamma_multi_reduces_to_gamma() {
        let a = 3.7f64;
        assert!((ln_gamma_multi::<f64>(1, a) - libm::lgamma(a)).abs() < 1e-12);
        // Γ₂(a) = √π Γ(a)Γ(a−1/2)
        let expect = 0.5 * std::f64::consts::PI.ln() + libm::lgamma(a) + libm::lgamma(a - 0.5);
        assert!((ln_gamma_multi::<f64>(2, a) - expect).abs() < 1e-12);
    }
}
