use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::special::gamma;

/// Increment correlations of fractional Gaussian noise with Hurst index `α/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCorrelation {
    pub alpha: f64,
    /// `values[j] = ρ(j)`, with `values[0] = 1`.
    pub values: Vec<f64>,
}

impl LimitCorrelation {
    /// `ρ(j)`, computed on the fly beyond the stored range.
    pub fn get(&self, j: usize) -> f64 {
        self.values.get(j).copied().unwrap_or_else(|| rho(self.alpha, j))
    }

    pub fn j_max(&self) -> usize {
        self.values.len() - 1
    }
}

/// `ρ(j) = ½((j+1)^α − 2j^α + |j−1|^α)`.
pub fn rho(alpha: f64, j: usize) -> f64 {
    if j == 0 {
        return 1.0;
    }
    let x = j as f64;
    if j > 1000 {
        // second difference via the binomial series avoids cancellation:
        // ½x^α Σ_k 2·C(α, 2k) x^{−2k}
        let inv2 = 1.0 / (x * x);
        let mut coef = 1.0;
        let mut sum = 0.0;
        let mut pow = 1.0;
        for k in 1..8 {
            let kk = 2 * k;
            coef *= (alpha - (kk as f64 - 2.0)) * (alpha - (kk as f64 - 1.0)) / ((kk - 1) as f64 * kk as f64);
            pow *= inv2;
            sum += coef * pow;
        }
        return x.powf(alpha) * sum;
    }
    0.5 * ((x + 1.0).powf(alpha) - 2.0 * x.powf(alpha) + (x - 1.0).powf(alpha))
}

pub fn limit_correlation(alpha: f64, j_max: usize) -> Result<LimitCorrelation> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::domain(format!("alpha={alpha} must lie in (0, 2)")));
    }
    let values = (0..=j_max).map(|j| rho(alpha, j)).collect();
    Ok(LimitCorrelation { alpha, values })
}

/// Leading-order small-`t` behaviour of `1 − r(t)` for the Gamma kernel.
pub fn gamma_kernel_small_t(nu: f64, lambda: f64, t: f64) -> Result<f64> {
    if !(nu > 0.5) {
        return Err(Error::domain(format!("nu={nu} must exceed 1/2")));
    }
    if !(lambda > 0.0) || !(t > 0.0) {
        return Err(Error::domain("lambda and t must be positive"));
    }
    let lt = lambda * t;
    Ok(if (nu - 1.5).abs() < 1e-12 {
        0.5 * lt * lt * t.ln().abs()
    } else if nu < 1.5 {
        2f64.powf(1.0 - 2.0 * nu) * gamma(1.5 - nu) / gamma(nu + 0.5) * lt.powf(2.0 * nu - 1.0)
    } else {
        lt * lt / (4.0 * (nu - 1.5))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn brownian_and_reference_values() {
        let lc = limit_correlation(1.0, 10).unwrap();
        assert!(lc.values[1..].iter().all(|v| v.abs() < 1e-15));
        assert_relative_eq!(rho(1.5, 1), 0.5 * (2f64.powf(1.5) - 2.0), epsilon = 1e-15);
        assert_relative_eq!(rho(1.5, 1), 0.414214, epsilon = 1e-6);
        assert_relative_eq!(rho(0.4, 1), -0.340246, epsilon = 1e-6);
        assert_relative_eq!(rho(1.5, 2), 0.5 * (3f64.powf(1.5) - 2.0 * 2f64.powf(1.5) + 1.0), epsilon = 1e-15);
    }

    #[test]
    fn signs_follow_alpha() {
        for j in 1..50 {
            assert!(rho(0.4, j) < 0.0);
            assert!(rho(1.5, j) > 0.0);
        }
    }

    #[test]
    fn partial_sums_telescope() {
        for alpha in [0.4, 1.0, 1.5] {
            for big_j in [1usize, 5, 50] {
                let s: f64 = (1..=big_j).map(|j| rho(alpha, j)).sum();
                let jf = big_j as f64;
                let expect = 0.5 * ((jf + 1.0).powf(alpha) - jf.powf(alpha) - 1.0);
                assert_relative_eq!(s, expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn series_branch_is_continuous() {
        for alpha in [0.4, 1.4] {
            let direct = |x: f64| 0.5 * ((x + 1.0).powf(alpha) - 2.0 * x.powf(alpha) + (x - 1.0).powf(alpha));
            assert_relative_eq!(rho(alpha, 1001), direct(1001.0), max_relative = 1e-6);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(limit_correlation(0.0, 3).is_err());
        assert!(limit_correlation(2.0, 3).is_err());
        assert!(gamma_kernel_small_t(0.5, 1.0, 0.1).is_err());
    }

    #[test]
    fn small_t_expansions() {
        // Γ(1/2)/Γ(3/2) = 2, so ν = 1 gives exactly t
        assert_relative_eq!(gamma_kernel_small_t(1.0, 1.0, 0.01).unwrap(), 0.01, max_relative = 1e-12);
        let t = (-10f64).exp();
        assert_relative_eq!(gamma_kernel_small_t(1.5, 1.0, t).unwrap(), 0.5 * t * t * 10.0, max_relative = 1e-12);
    }
}
