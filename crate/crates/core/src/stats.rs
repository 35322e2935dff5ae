//! Chi-square quantiles for the innovation test.

use crate::error::{Error, Result};

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln_pre = a * libm::log(x) - x - libm::lgamma(a);
    if x < a + 1.0 {
        // Series.
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = a;
        for _ in 0..10_000 {
            n += 1.0;
            term *= x / n;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (sum * libm::exp(ln_pre)).min(1.0)
    } else {
        // Continued fraction for Q (modified Lentz).
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (1.0 - libm::exp(ln_pre) * h).max(0.0)
    }
}

pub fn chi2_cdf(x: f64, dof: f64) -> f64 {
    gamma_p(dof / 2.0, x / 2.0)
}

/// `x` with `P(χ²_dof ≤ x) = p`, by bisection to full precision.
pub fn chi2_quantile(p: f64, dof: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument("quantile level must lie in (0, 1)"));
    }
    if !(dof > 0.0 && dof.is_finite()) {
        return Err(Error::InvalidArgument("degrees of freedom must be positive"));
    }
    let mut lo = 0.0;
    let mut hi = dof + 10.0 * libm::sqrt(2.0 * dof) + 10.0;
    while chi2_cdf(hi, dof) < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if chi2_cdf(mid, dof) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        // Standard table entries.
        assert!((chi2_quantile(0.95, 1.0).unwrap() - 3.841459).abs() < 1e-6);
        assert!((chi2_quantile(0.99, 3.0).unwrap() - 11.344867).abs() < 1e-6);
        assert!((chi2_quantile(0.5, 2.0).unwrap() - 2.0 * core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_levels() {
        assert!(chi2_quantile(1.0, 3.0).is_err());
        assert!(chi2_quantile(0.5, 0.0).is_err());
    }
}
