//! Univariate helpers used inside the integrand.

use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::{gamma_lr, ln_gamma};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// Standard normal CDF, accurate in both tails.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * erfc(-x * FRAC_1_SQRT_2)
    }
}

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    if x.is_infinite() {
        0.0
    } else {
        INV_SQRT_2PI * (-0.5 * x * x).exp()
    }
}

/// Standard normal quantile.
#[inline]
pub fn norm_inv(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        -SQRT_2 * erfc_inv(2.0 * p)
    }
}

/// Quantile of the chi-square distribution with `nu` degrees of freedom.
///
/// Halley iterations on the regularized lower incomplete gamma function,
/// started from the Wilson-Hilferty approximation. Above `1e5` degrees of
/// freedom the Wilson-Hilferty value is returned directly; its relative
/// error there is far below anything the integrator can resolve.
pub fn chi2_inv(p: f64, nu: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let a = 0.5 * nu;
    let z = norm_inv(p);
    if nu > 1e5 {
        let h = 2.0 / (9.0 * nu);
        let c = 1.0 - h + z * h.sqrt();
        return nu * c * c * c;
    }
    gamma_p_inv(a, p, z, ln_gamma(a)) * 2.0
}

/// Inverse of P(a, x) in x, given `z = norm_inv(p)` and `gln = ln_gamma(a)`.
fn gamma_p_inv(a: f64, p: f64, z: f64, gln: f64) -> f64 {
    let a1 = a - 1.0;
    let (lna1, afac) = if a > 1.0 {
        let lna1 = a1.ln();
        (lna1, (a1 * (lna1 - 1.0) - gln).exp())
    } else {
        (0.0, 0.0)
    };
    let mut x = if a > 1.0 {
        let c = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * a.sqrt());
        (a * c * c * c).max(1e-3)
    } else {
        let t = 1.0 - a * (0.253 + a * 0.12);
        if p < t {
            (p / t).powf(1.0 / a)
        } else {
            1.0 - (1.0 - (p - t) / (1.0 - t)).ln()
        }
    };
    for _ in 0..16 {
        if x <= 0.0 {
            return 0.0;
        }
        let err = gamma_lr(a, x) - p;
        let dens = if a > 1.0 {
            afac * (-(x - a1) + a1 * (x.ln() - lna1)).exp()
        } else {
            (-x + a1 * x.ln() - gln).exp()
        };
        if dens == 0.0 {
            break;
        }
        let u = err / dens;
        let step = u / (1.0 - 0.5 * (u * (a1 / x - 1.0)).min(1.0));
        x -= step;
        if x <= 0.0 {
            x = 0.5 * (x + step);
        }
        if step.abs() < 1e-12 * x {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

    #[test]
    fn normal_round_trip() {
        let n = Normal::new(0.0, 1.0).unwrap();
        for &x in &[-8.0, -3.0, -1.0, 0.0, 0.5, 2.0, 6.0] {
            assert!((norm_cdf(x) - n.cdf(x)).abs() < 1e-15);
            // invert from the tail where p carries full precision
            let back = if x <= 0.0 { norm_inv(norm_cdf(x)) } else { -norm_inv(norm_cdf(-x)) };
            assert!((back - x).abs() < 1e-9 * (1.0 + x.abs()), "x={x}");
        }
        assert_eq!(norm_cdf(f64::INFINITY), 1.0);
        assert_eq!(norm_inv(0.0), f64::NEG_INFINITY);
        assert!((norm_pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-16);
    }

    #[test]
    fn chi2_quantiles_invert_cdf() {
        for &nu in &[1.0, 2.0, 5.0, 10.0, 97.0, 297.0, 5000.0] {
            let d = ChiSquared::new(nu).unwrap();
            for &p in &[1e-6, 0.01, 0.2, 0.5, 0.8, 0.99, 1.0 - 1e-6] {
                let x = chi2_inv(p, nu);
                assert!((d.cdf(x) - p).abs() < 1e-9, "nu={nu} p={p} x={x}");
            }
        }
    }

    #[test]
    fn chi2_large_dof_approximation() {
        // mean nu, sd sqrt(2 nu)
        let nu = 1e6;
        let x = chi2_inv(0.5, nu);
        assert!((x / nu - 1.0).abs() < 1e-5);
        let x = chi2_inv(norm_cdf(1.0), nu);
        assert!(((x - nu) / (2.0 * nu).sqrt() - 1.0).abs() < 1e-2);
    }
}
