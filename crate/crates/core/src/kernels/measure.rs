use serde::{Deserialize, Serialize};

use super::covariance::{geometric_knots, integrate_knots, knots_within, ls_slope};
use super::KernelSpec;
use crate::error::{Error, Result};
use crate::numerics::quad::QuadConfig;

/// `π^n((eps, ∞))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiTail {
    pub n: usize,
    pub eps: f64,
    pub mass: f64,
}

/// `∫_a^b (g(x − 1/n) − g(x))² dx` with knots at the kernel's singular points.
fn energy_between(spec: &KernelSpec, n: usize, a: f64, b: f64, cfg: &QuadConfig) -> Result<f64> {
    let t = 1.0 / n as f64;
    let end = spec.support_end() + t;
    let hi = b.min(end);
    if hi <= a {
        return Ok(0.0);
    }
    let mut pts = vec![t];
    pts.extend(geometric_knots(t, t, end).into_iter().map(|x| x + t));
    for bp in spec.breakpoints() {
        pts.push(bp);
        pts.push(bp + t);
    }
    let knots = knots_within(pts, a.max(0.0), hi);
    integrate_knots(
        |x| (spec.value(x - t) - spec.value(x)).powi(2),
        &knots,
        &[0.0, t],
        spec.grading_exponent(),
        cfg,
    )
}

/// Total mass `∫_0^∞ (g(x − 1/n) − g(x))² dx = R̄(1/n)` by the same quadrature.
fn total_energy(spec: &KernelSpec, n: usize, cfg: &QuadConfig) -> Result<f64> {
    let total = energy_between(spec, n, 0.0, f64::INFINITY, cfg)?;
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::domain("pi^n normalizer is not finite and positive"));
    }
    Ok(total)
}

fn check_args(spec: &KernelSpec, n: usize, eps: f64) -> Result<()> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::validation("n must be positive"));
    }
    if !(eps > 0.0) {
        return Err(Error::validation("eps must be positive"));
    }
    Ok(())
}

/// `π^n((eps, ∞))` where `π^n` has density `(g(x − 1/n) − g(x))² / R̄(1/n)`.
pub fn pi_tail(spec: &KernelSpec, n: usize, eps: f64, cfg: &QuadConfig) -> Result<PiTail> {
    check_args(spec, n, eps)?;
    let total = total_energy(spec, n, cfg)?;
    let tail = energy_between(spec, n, eps, f64::INFINITY, cfg)?;
    Ok(PiTail { n, eps, mass: (tail / total).clamp(0.0, 1.0) })
}

/// `π^n([0, eps])`, the complement of [`pi_tail`].
pub fn pi_head(spec: &KernelSpec, n: usize, eps: f64, cfg: &QuadConfig) -> Result<f64> {
    check_args(spec, n, eps)?;
    let total = total_energy(spec, n, cfg)?;
    Ok((energy_between(spec, n, 0.0, eps, cfg)? / total).clamp(0.0, 1.0))
}

/// `π^n((a, b))`.
pub fn pi_mass_between(spec: &KernelSpec, n: usize, a: f64, b: f64, cfg: &QuadConfig) -> Result<f64> {
    check_args(spec, n, a.max(f64::MIN_POSITIVE))?;
    let total = total_energy(spec, n, cfg)?;
    Ok((energy_between(spec, n, a, b, cfg)? / total).clamp(0.0, 1.0))
}

/// Log-log slope of `π^n((eps, ∞))` against `n`.
pub fn pi_tail_slope(spec: &KernelSpec, ns: &[usize], eps: f64, cfg: &QuadConfig) -> Result<(f64, f64)> {
    if ns.len() < 2 {
        return Err(Error::validation("slope needs at least two grid frequencies"));
    }
    let pts = ns
        .iter()
        .map(|&n| pi_tail(spec, n, eps, cfg).map(|p| ((n as f64).ln(), p.mass.ln())))
        .collect::<Result<Vec<_>>>()?;
    Ok(ls_slope(&pts))
}

/// Log-log slope of `π^n((a, b))` against `n`.
pub fn pi_window_slope(spec: &KernelSpec, ns: &[usize], a: f64, b: f64, cfg: &QuadConfig) -> Result<(f64, f64)> {
    if ns.len() < 2 {
        return Err(Error::validation("slope needs at least two grid frequencies"));
    }
    let pts = ns
        .iter()
        .map(|&n| pi_mass_between(spec, n, a, b, cfg).map(|m| ((n as f64).ln(), m.ln())))
        .collect::<Result<Vec<_>>>()?;
    Ok(ls_slope(&pts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::build_covariance;
    use approx::assert_relative_eq;

    #[test]
    fn zero_beyond_support() {
        let spec = KernelSpec::power_law(-0.3);
        let n = 64;
        let p = pi_tail(&spec, n, 1.0 + 1.0 / n as f64, &QuadConfig::default()).unwrap();
        assert_eq!(p.mass, 0.0);
    }

    #[test]
    fn normalizer_is_rbar() {
        let cfg = QuadConfig::default();
        for spec in [KernelSpec::power_law(-0.3), KernelSpec::gamma(0.75, 1.0), KernelSpec::exponential(1.0)] {
            let m = build_covariance(&spec, &cfg).unwrap();
            assert_relative_eq!(total_energy(&spec, 256, &cfg).unwrap(), m.rbar(1.0 / 256.0).unwrap(), max_relative = 1e-7);
        }
    }

    #[test]
    fn head_and_tail_sum_to_one() {
        let cfg = QuadConfig::default();
        let spec = KernelSpec::gamma(0.75, 1.0);
        for eps in [1e-4, 1e-2, 0.3] {
            let s = pi_tail(&spec, 512, eps, &cfg).unwrap().mass + pi_head(&spec, 512, eps, &cfg).unwrap();
            assert_relative_eq!(s, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn tail_is_monotone_and_tends_to_one() {
        let cfg = QuadConfig::default();
        let spec = KernelSpec::power_law(0.25);
        let mut prev = 1.0 + 1e-12;
        for eps in [1e-9, 1e-4, 1e-3, 0.01, 0.1, 0.5, 0.99] {
            let m = pi_tail(&spec, 128, eps, &cfg).unwrap().mass;
            assert!(m <= prev);
            prev = m;
        }
        assert!(pi_tail(&spec, 128, 1e-12, &cfg).unwrap().mass > 0.999);
    }

    #[test]
    fn exponential_kernel_limit_mass() {
        let p = pi_tail(&KernelSpec::exponential(1.0), 1 << 14, 0.5, &QuadConfig::default()).unwrap();
        let limit = 1.0 / (1.0 + 2f64.exp());
        assert!((p.mass - limit).abs() < 1e-3, "{} vs {limit}", p.mass);
    }

    #[test]
    fn amplitude_invariance() {
        let cfg = QuadConfig::default();
        let a = pi_tail(&KernelSpec::gamma(0.9, 1.0), 300, 0.05, &cfg).unwrap().mass;
        let b = pi_tail(&KernelSpec::gamma(0.9, 1.0).with_amplitude(4.0), 300, 0.05, &cfg).unwrap().mass;
        assert_relative_eq!(a, b, max_relative = 1e-9);
    }
}
