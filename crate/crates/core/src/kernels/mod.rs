//! Memory kernels `g` and the deterministic quantities derived from them.
//!
//! A kernel vanishes on `(−∞, 0]` and is square integrable. From it we build
//! the increment variance function `R̄`, the scale `τ_n`, the increment
//! correlations `r_n(j)`, the measures `π^n` and the condition checks that
//! decide which limit theorems apply.

mod conditions;
mod covariance;
mod limit;
mod measure;

pub use conditions::{check_conditions, ConditionReport};
pub use covariance::{
    build_covariance, gamma_rbar_via_autocorrelation, AlphaFit, CovarianceModel, CovarianceSource,
};
pub use limit::{gamma_kernel_small_t, limit_correlation, rho, LimitCorrelation};
pub use measure::{pi_head, pi_mass_between, pi_tail, pi_tail_slope, pi_window_slope, PiTail};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quad::{integrate_left_graded, integrate_pieces, QuadConfig};
use crate::numerics::special::gamma;

/// What a tabulated kernel does when queried off its grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    /// Queries outside `[grid[0], grid[last]]` are domain errors.
    #[default]
    Error,
    /// The kernel is zero outside its grid.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelFamily {
    /// `g(x) = x^δ 1_{(0,1]}(x)`.
    PowerLawTruncated { delta: f64 },
    /// `g(x) = x^{ν−1} e^{−λx}`.
    Gamma { nu: f64, lambda: f64 },
    /// `g(x) = e^{−λx} 1_{(0,1)}(x)`.
    ExponentialTruncated { lambda: f64 },
    /// Piecewise-linear interpolation of `(grid, values)`.
    Tabulated {
        grid: Vec<f64>,
        values: Vec<f64>,
        #[serde(default)]
        extrapolation: Extrapolation,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// Constant multiplier `c` in `c·g`.
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Upper support bound; `None` means the family's own (possibly infinite) support.
    #[serde(default)]
    pub support_hint: Option<f64>,
}

fn one() -> f64 {
    1.0
}

/// Relative level below which the Gamma kernel is treated as zero.
const GAMMA_TAIL_REL: f64 = 1e-12;

impl KernelSpec {
    pub fn new(family: KernelFamily) -> Self {
        Self { family, amplitude: 1.0, support_hint: None }
    }

    pub fn power_law(delta: f64) -> Self {
        Self::new(KernelFamily::PowerLawTruncated { delta })
    }

    pub fn gamma(nu: f64, lambda: f64) -> Self {
        Self::new(KernelFamily::Gamma { nu, lambda })
    }

    pub fn exponential(lambda: f64) -> Self {
        Self::new(KernelFamily::ExponentialTruncated { lambda })
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>, extrapolation: Extrapolation) -> Self {
        Self::new(KernelFamily::Tabulated { grid, values, extrapolation })
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// Short identifier used in metadata and report headers.
    pub fn id(&self) -> String {
        let base = match &self.family {
            KernelFamily::PowerLawTruncated { delta } => format!("powerlaw(delta={delta})"),
            KernelFamily::Gamma { nu, lambda } => format!("gamma(nu={nu},lambda={lambda})"),
            KernelFamily::ExponentialTruncated { lambda } => format!("exp(lambda={lambda})"),
            KernelFamily::Tabulated { grid, .. } => format!("tabulated({} points)", grid.len()),
        };
        if self.amplitude != 1.0 {
            format!("{}*{base}", self.amplitude)
        } else {
            base
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::validation("kernel amplitude must be positive and finite"));
        }
        if let Some(s) = self.support_hint {
            if !(s > 0.0) {
                return Err(Error::validation("support_hint must be positive"));
            }
        }
        match &self.family {
            KernelFamily::PowerLawTruncated { delta } => {
                let d = *delta;
                if !(d > -0.5 && d < 0.5) || d == 0.0 {
                    return Err(Error::validation(format!(
                        "power-law exponent delta={d} must lie in (-1/2, 1/2) \\ {{0}}"
                    )));
                }
            }
            KernelFamily::Gamma { nu, lambda } => {
                if !(*nu > 0.5) || !nu.is_finite() {
                    return Err(Error::validation(format!(
                        "gamma kernel shape nu={nu} must exceed 1/2 for square integrability"
                    )));
                }
                if !(*lambda > 0.0) || !lambda.is_finite() {
                    return Err(Error::validation(format!("gamma kernel rate lambda={lambda} must be positive")));
                }
            }
            KernelFamily::ExponentialTruncated { lambda } => {
                if !(*lambda > 0.0) || !lambda.is_finite() {
                    return Err(Error::validation(format!(
                        "exponential kernel rate lambda={lambda} must be positive"
                    )));
                }
            }
            KernelFamily::Tabulated { grid, values, .. } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return Err(Error::validation(
                        "tabulated kernel needs at least two (t, g) pairs of equal length",
                    ));
                }
                if grid[0] < 0.0 {
                    return Err(Error::validation("tabulated kernel grid must be non-negative"));
                }
                if grid.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::validation("tabulated kernel grid must be strictly increasing"));
                }
                if values.iter().chain(grid.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::validation("tabulated kernel contains non-finite values"));
                }
                let nsq = self.norm_sq();
                if !(nsq > 0.0 && nsq.is_finite()) {
                    return Err(Error::validation("tabulated kernel has zero or infinite L2 norm"));
                }
            }
        }
        Ok(())
    }

    /// `g(t)`, with domain errors for tabulated kernels queried off-grid.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t.is_nan() {
            return Err(Error::domain("kernel evaluated at NaN"));
        }
        if t <= 0.0 {
            return Ok(0.0);
        }
        if let KernelFamily::Tabulated { grid, extrapolation: Extrapolation::Error, .. } = &self.family {
            if t < grid[0] || t > grid[grid.len() - 1] {
                return Err(Error::domain(format!(
                    "t={t} outside tabulated grid [{}, {}] and no extrapolation policy set",
                    grid[0],
                    grid[grid.len() - 1]
                )));
            }
        }
        Ok(self.value(t))
    }

    /// Unchecked `g(t)` for validated kernels; tabulated kernels read as zero off-grid.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if let Some(s) = self.support_hint {
            if t > s {
                return 0.0;
            }
        }
        let raw = match &self.family {
            KernelFamily::PowerLawTruncated { delta } => {
                if t <= 1.0 {
                    t.powf(*delta)
                } else {
                    0.0
                }
            }
            KernelFamily::Gamma { nu, lambda } => t.powf(nu - 1.0) * (-lambda * t).exp(),
            KernelFamily::ExponentialTruncated { lambda } => {
                if t < 1.0 {
                    (-lambda * t).exp()
                } else {
                    0.0
                }
            }
            KernelFamily::Tabulated { grid, values, .. } => interpolate(grid, values, t),
        };
        self.amplitude * raw
    }

    /// `g'(t)` on the open support (zero outside, one-sided at tabulated knots).
    pub fn derivative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let raw = match &self.family {
            KernelFamily::PowerLawTruncated { delta } => {
                if t < 1.0 {
                    delta * t.powf(delta - 1.0)
                } else {
                    0.0
                }
            }
            KernelFamily::Gamma { nu, lambda } => {
                t.powf(nu - 1.0) * (-lambda * t).exp() * ((nu - 1.0) / t - lambda)
            }
            KernelFamily::ExponentialTruncated { lambda } => {
                if t < 1.0 {
                    -lambda * (-lambda * t).exp()
                } else {
                    0.0
                }
            }
            KernelFamily::Tabulated { grid, values, .. } => {
                if t < grid[0] || t >= grid[grid.len() - 1] {
                    0.0
                } else {
                    let i = grid.partition_point(|&x| x <= t) - 1;
                    (values[i + 1] - values[i]) / (grid[i + 1] - grid[i])
                }
            }
        };
        self.amplitude * raw
    }

    /// `∫_0^∞ g²`.
    pub fn norm_sq(&self) -> f64 {
        let c2 = self.amplitude * self.amplitude;
        if self.support_hint.is_some() {
            return c2 * self.numeric_norm_sq();
        }
        c2 * match &self.family {
            KernelFamily::PowerLawTruncated { delta } => 1.0 / (2.0 * delta + 1.0),
            KernelFamily::Gamma { nu, lambda } => gamma(2.0 * nu - 1.0) / (2.0 * lambda).powf(2.0 * nu - 1.0),
            KernelFamily::ExponentialTruncated { lambda } => (1.0 - (-2.0 * lambda).exp()) / (2.0 * lambda),
            KernelFamily::Tabulated { grid, values, .. } => {
                // exact for piecewise-linear g
                grid.windows(2)
                    .zip(values.windows(2))
                    .map(|(x, y)| (x[1] - x[0]) * (y[0] * y[0] + y[0] * y[1] + y[1] * y[1]) / 3.0)
                    .sum()
            }
        }
    }

    fn numeric_norm_sq(&self) -> f64 {
        let unit = KernelSpec { amplitude: 1.0, ..self.clone() };
        let end = unit.support_end();
        let q = unit.grading_exponent();
        let cfg = QuadConfig::tight();
        let first = end.min(1e-3);
        let head = integrate_left_graded(|x| unit.value(x).powi(2), 0.0, first, q, &cfg).map(|r| r.value);
        let mut pts = vec![first];
        pts.extend(unit.breakpoints().into_iter().filter(|&b| b > first && b < end));
        pts.push(end);
        let tail = integrate_pieces(|x| unit.value(x).powi(2), &pts, &cfg).map(|r| r.value);
        match (head, tail) {
            (Ok(h), Ok(t)) => h + t,
            _ => f64::NAN,
        }
    }

    /// Exponent `e` with `g(x) ≍ x^e` as `x ↓ 0` (zero for bounded kernels).
    pub fn small_exponent(&self) -> f64 {
        match &self.family {
            KernelFamily::PowerLawTruncated { delta } => *delta,
            KernelFamily::Gamma { nu, .. } => nu - 1.0,
            _ => 0.0,
        }
    }

    /// Grading power `q` for `x = u^q` substitutions near the origin.
    pub(crate) fn grading_exponent(&self) -> f64 {
        let e = self.small_exponent();
        if e < 0.0 {
            (1.0 / (1.0 + 2.0 * e)).min(12.0)
        } else if e > 0.0 && e < 1.0 {
            2.0
        } else {
            1.0
        }
    }

    /// Effective support end: analytic for truncated families, the point where
    /// `g` falls below `1e−12·max g` for the Gamma family.
    pub fn support_end(&self) -> f64 {
        let natural = match &self.family {
            KernelFamily::PowerLawTruncated { .. } | KernelFamily::ExponentialTruncated { .. } => 1.0,
            KernelFamily::Tabulated { grid, .. } => grid[grid.len() - 1],
            KernelFamily::Gamma { nu, lambda } => gamma_effective_support(*nu, *lambda),
        };
        match self.support_hint {
            Some(s) => s.min(natural),
            None => natural,
        }
    }

    /// Whether `g` has compact support (so `R̄` saturates beyond it).
    pub fn has_compact_support(&self) -> bool {
        !matches!(self.family, KernelFamily::Gamma { .. }) || self.support_hint.is_some()
    }

    /// Points in `(0, support_end]` where `g` jumps or kinks.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = match &self.family {
            KernelFamily::PowerLawTruncated { .. } | KernelFamily::ExponentialTruncated { .. } => vec![1.0],
            KernelFamily::Gamma { .. } => vec![],
            KernelFamily::Tabulated { grid, .. } => grid.iter().copied().filter(|&x| x > 0.0).collect(),
        };
        if let Some(s) = self.support_hint {
            b.retain(|&x| x < s);
            b.push(s);
        }
        b
    }

    /// Index `α` of `R̄(t) ≍ t^α` implied by the family's parameters, when known.
    pub fn declared_alpha(&self) -> Option<f64> {
        match &self.family {
            KernelFamily::PowerLawTruncated { delta } => Some(2.0 * delta + 1.0),
            KernelFamily::Gamma { nu, .. } => Some(2.0 * nu - 1.0),
            KernelFamily::ExponentialTruncated { .. } => Some(1.0),
            KernelFamily::Tabulated { .. } => None,
        }
    }

    /// Tail energy `∫_M^∞ g² / ∫_0^∞ g²` discarded by truncating the past at depth `m`.
    pub fn tail_energy(&self, m: f64) -> f64 {
        let total = self.norm_sq();
        if m <= 0.0 {
            return 1.0;
        }
        let end = self.support_end();
        if m >= end && self.has_compact_support() {
            return 0.0;
        }
        let cfg = QuadConfig::tight();
        let far = match &self.family {
            KernelFamily::Gamma { nu, lambda } => m.max(end) + 50.0 / lambda + 10.0 * nu,
            _ => end,
        };
        let mut pts = vec![m];
        pts.extend(self.breakpoints().into_iter().filter(|&b| b > m && b < far));
        pts.push(far);
        let tail = integrate_pieces(|x| self.value(x).powi(2), &pts, &cfg)
            .map(|r| r.value)
            .unwrap_or(f64::NAN);
        (tail / total).clamp(0.0, 1.0)
    }
}

fn interpolate(grid: &[f64], values: &[f64], t: f64) -> f64 {
    let last = grid.len() - 1;
    if t < grid[0] || t > grid[last] {
        return 0.0;
    }
    if t == grid[last] {
        return values[last];
    }
    let i = grid.partition_point(|&x| x <= t) - 1;
    let w = (t - grid[i]) / (grid[i + 1] - grid[i]);
    values[i] * (1.0 - w) + values[i + 1] * w
}

fn gamma_effective_support(nu: f64, lambda: f64) -> f64 {
    let g = |x: f64| x.powf(nu - 1.0) * (-lambda * x).exp();
    // reference level: the mode for nu > 1, otherwise the value at x = 1/λ
    let reference = if nu > 1.0 { g((nu - 1.0) / lambda) } else { g(1.0 / lambda) };
    let target = GAMMA_TAIL_REL * reference;
    let start = if nu > 1.0 { (nu - 1.0) / lambda } else { 1.0 / lambda };
    let mut hi = start.max(1.0 / lambda) * 2.0;
    while g(hi) > target {
        hi *= 2.0;
    }
    let mut lo = start;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `g(t)` for a validated spec; zero for `t ≤ 0`.
pub fn eval_kernel(spec: &KernelSpec, t: f64) -> Result<f64> {
    spec.eval(t)
}
