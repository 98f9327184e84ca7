use serde::{Deserialize, Serialize};

use super::measure::pi_tail_slope;
use super::{build_covariance, KernelFamily, KernelSpec};
use crate::error::{Error, Result};
use crate::gaussmom::PowerVector;
use crate::numerics::quad::QuadConfig;

/// Which limit theorems apply to a kernel / power / volatility combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub kernel: String,
    pub lln_ok: bool,
    pub clt_ok: bool,
    /// Index of `R̄(t) ≍ t^α` at zero.
    pub alpha: Option<f64>,
    /// Near-zero exponent `δ` of the kernel.
    pub delta: Option<f64>,
    /// Smallest strictly positive power over all families.
    pub p_min: f64,
    pub gamma_vol: f64,
    /// Volatility smoothness needed for the CLT: `γ > 1/(2(p ∧ 1))`.
    pub required_gamma: f64,
    /// Open interval of `δ` for which the CLT holds at this `p_min`.
    pub delta_bounds: (f64, f64),
    /// Decay exponent of `π^n((ε, ∞))` in `n` (numeric for tabulated kernels).
    pub lambda_pi: Option<f64>,
    /// Whether the built-in family is one for which the technical regularity
    /// assumption on `R̄` is established.
    pub a3_certified: bool,
    /// Numeric slope estimates were too noisy to decide.
    pub inconclusive: bool,
    pub notes: Vec<String>,
}

/// Closed-form regions for analytic kernels, numeric slope estimates for tabulated ones.
pub fn check_conditions(spec: &KernelSpec, powers: &[PowerVector], gamma_vol: f64) -> Result<ConditionReport> {
    spec.validate()?;
    if powers.is_empty() {
        return Err(Error::validation("at least one power vector is required"));
    }
    if !(gamma_vol > 0.0 && gamma_vol <= 1.0) {
        return Err(Error::validation(format!("gamma_vol={gamma_vol} must lie in (0, 1]")));
    }
    let p_min = powers.iter().map(|pv| pv.p_min).filter(|p| *p > 0.0).fold(f64::INFINITY, f64::min);
    if !p_min.is_finite() {
        return Err(Error::validation("all powers are zero"));
    }
    let p1 = p_min.min(1.0);
    let required_gamma = 1.0 / (2.0 * p1);
    let delta_hi = if p_min >= 1.0 { 0.0 } else { (p_min - 1.0) / (2.0 * p_min) };
    let delta_bounds = (-0.5, delta_hi);
    let gamma_ok = gamma_vol > required_gamma;

    let mut notes = Vec::new();
    let mut inconclusive = false;
    let mut a3_certified = false;
    let in_lln_region = |d: f64| d > -0.5 && d < 0.5 && d != 0.0;
    let in_clt_region = |d: f64| d > delta_bounds.0 && d < delta_bounds.1;

    let (delta, alpha, lambda_pi, lln_ok, mut clt_ok) = match &spec.family {
        KernelFamily::PowerLawTruncated { delta } => {
            let d = *delta;
            if d > 0.0 {
                notes.push(format!(
                    "kernel jumps from 1 to 0 at its support end; R̄ carries a linear term that dominates t^{:.3} at small t",
                    2.0 * d + 1.0
                ));
            }
            (Some(d), Some(2.0 * d + 1.0), Some(2.0 * d - 1.0), in_lln_region(d), in_clt_region(d))
        }
        KernelFamily::Gamma { nu, .. } => {
            let d = nu - 1.0;
            let alpha = 2.0 * nu - 1.0;
            if alpha >= 2.0 {
                notes.push(format!("alpha=2nu-1={alpha} lies outside (0, 2)"));
                if *nu > 1.5 {
                    notes.push("autocorrelation is twice differentiable at 0: continuously differentiable sample paths".into());
                }
            } else {
                a3_certified = true;
            }
            if d == 0.0 {
                notes.push("nu=1 gives a semimartingale core; use semimartingale scaling".into());
            }
            if *nu > 0.5 && *nu < 1.25 {
                notes.push("limit centering may replace the finite-n centering (nu < 5/4)".into());
            }
            (Some(d), Some(alpha), Some(2.0 * d - 1.0), alpha < 2.0 && in_lln_region(d), alpha < 2.0 && in_clt_region(d))
        }
        KernelFamily::ExponentialTruncated { lambda } => {
            let w = 1.0 / (1.0 + (2.0 * lambda).exp());
            notes.push(format!(
                "pi^n converges to a two-atom law with mass {w:.6} at 1: the measure does not concentrate at 0"
            ));
            (Some(0.0), Some(1.0), Some(0.0), false, false)
        }
        KernelFamily::Tabulated { .. } => {
            let model = build_covariance(spec, &QuadConfig::default())?;
            let fit = model.alpha_fit().expect("kernel models carry a fit");
            let d = 0.5 * (fit.value - 1.0);
            let ns = [256usize, 512, 1024, 2048, 4096];
            let (slope, se) = pi_tail_slope(spec, &ns, 0.1, &QuadConfig::default())?;
            if fit.inconclusive || !(se < 0.05) {
                inconclusive = true;
                notes.push(format!(
                    "numeric slopes ambiguous: alpha SE {:.3}, pi-tail slope SE {:.3}",
                    fit.std_err, se
                ));
            }
            let lln = slope < 0.0 && fit.value > 0.0 && fit.value < 2.0;
            // condition on π^n((n^{−κ}, ∞)) with κ → 0 reduces to the tail slope itself
            let clt = lln && slope < -1.0 / p1 && in_clt_region(d);
            (Some(d), Some(fit.value), Some(slope), lln, clt)
        }
    };
    if let Some(a) = alpha {
        if a >= 1.5 {
            clt_ok = false;
            notes.push("beta series only converges for alpha in (0, 3/2)".into());
        }
    }
    if !gamma_ok {
        notes.push(format!(
            "volatility smoothness gamma={gamma_vol} does not exceed the required {required_gamma:.4}"
        ));
    }
    Ok(ConditionReport {
        kernel: spec.id(),
        lln_ok,
        clt_ok: clt_ok && lln_ok && gamma_ok,
        alpha,
        delta,
        p_min,
        gamma_vol,
        required_gamma,
        delta_bounds,
        lambda_pi,
        a3_certified,
        inconclusive,
        notes,
    })
}
