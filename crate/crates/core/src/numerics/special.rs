//! Special functions used across the crate.

use std::f64::consts::{PI, SQRT_2};

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inverse of the standard normal CDF.
pub fn norm_inv(p: f64) -> f64 {
    -SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p)
}

/// `E|m + s Z|^p` for `Z ~ N(0, 1)`, the non-central absolute moment.
///
/// Uses closed forms for p ∈ {0, 1, 2, 4}, Kummer's series for moderate
/// `m²/(2s²)` and the binomial expansion when the mean dominates.
pub fn noncentral_abs_moment(p: f64, m: f64, s: f64) -> f64 {
    if p == 0.0 {
        return 1.0;
    }
    if s <= 0.0 {
        return m.abs().powf(p);
    }
    if p == 2.0 {
        return m * m + s * s;
    }
    if p == 4.0 {
        let m2 = m * m;
        let s2 = s * s;
        return m2 * m2 + 6.0 * m2 * s2 + 3.0 * s2 * s2;
    }
    let r = m / s;
    if p == 1.0 {
        let a = r.abs();
        // E|r + Z| = 2φ(r) + r(1 − 2Φ(−r))
        let v = 2.0 * (-0.5 * a * a).exp() / (2.0 * PI).sqrt() + a * statrs::function::erf::erf(a / SQRT_2);
        return s * v;
    }
    let z = 0.5 * r * r;
    if z > 40.0 {
        return s.powf(p) * shifted_moment_asymptotic(p, r.abs());
    }
    // 1F1(−p/2; 1/2; −z) = e^{−z} 1F1((1+p)/2; 1/2; z), a positive series
    let a = 0.5 * (1.0 + p);
    let b = 0.5;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        term *= (a + k) / (b + k) * z / (k + 1.0);
        sum += term;
        k += 1.0;
        if term < 1e-17 * sum && k > z {
            break;
        }
        if k > 5000.0 {
            break;
        }
    }
    s.powf(p) * crate::gaussmom::mu_p(p) * (-z).exp() * sum
}

/// `E|r + Z|^p` for large `|r|` via `|r|^p Σ_k C(p, 2k) (2k−1)!! r^{−2k}`.
fn shifted_moment_asymptotic(p: f64, r: f64) -> f64 {
    let inv = 1.0 / (r * r);
    let mut sum: f64 = 1.0;
    let mut coef = 1.0;
    let mut prev = f64::INFINITY;
    let mut k = 1.0;
    while k < 60.0 {
        // C(p, 2k)(2k−1)!! from C(p, 2k−2)(2k−3)!!
        coef *= (p - 2.0 * k + 2.0) * (p - 2.0 * k + 1.0) / ((2.0 * k) * (2.0 * k - 1.0)) * (2.0 * k - 1.0);
        let term = coef * inv.powf(k);
        if term.abs() >= prev || term.abs() < 1e-18 * sum.abs() {
            if term.abs() < prev {
                sum += term;
            }
            break;
        }
        sum += term;
        prev = term.abs();
        k += 1.0;
    }
    r.powf(p) * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quad::{integrate_pieces, QuadConfig};
    use approx::assert_relative_eq;

    fn by_quadrature(p: f64, m: f64, s: f64) -> f64 {
        let f = |z: f64| (m + s * z).abs().powf(p) * norm_pdf(z);
        let kink = -m / s;
        let mut pts = vec![-12.0, 12.0];
        if kink.abs() < 12.0 {
            pts.insert(1, kink);
        }
        integrate_pieces(f, &pts, &QuadConfig::tight()).unwrap().value
    }

    #[test]
    fn matches_quadrature_across_regimes() {
        for &p in &[0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0] {
            for &(m, s) in &[(0.0, 1.0), (0.3, 0.8), (-1.2, 0.5), (2.5, 0.3), (-4.0, 0.5), (1.0, 2.0)] {
                let exact = by_quadrature(p, m, s);
                let got = noncentral_abs_moment(p, m, s);
                assert_relative_eq!(got, exact, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_scale_is_point_mass() {
        assert_relative_eq!(noncentral_abs_moment(1.5, -2.0, 0.0), 2f64.powf(1.5));
        assert_eq!(noncentral_abs_moment(0.0, 0.0, 0.0), 1.0);
    }

    #[test]
    fn normal_cdf_and_inverse() {
        assert_relative_eq!(norm_cdf(0.0), 0.5, epsilon = 1e-15);
        for &p in &[1e-6, 0.025, 0.3, 0.5, 0.9, 0.999] {
            assert_relative_eq!(norm_cdf(norm_inv(p)), p, max_relative = 1e-10);
        }
    }
}
