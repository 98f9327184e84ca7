use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{KernelFamily, KernelSpec};
use crate::error::{Error, Result};
use crate::numerics::quad::{integrate, integrate_left_graded, QuadConfig};
use crate::numerics::special::gamma;

/// Where `R̄` comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum CovarianceSource {
    /// `R̄` computed from a kernel by quadrature.
    Kernel(KernelSpec),
    /// `R̄(t) = scale·t^α`: fractional Brownian motion increments (α = 1 is Brownian motion).
    PowerLaw { alpha: f64, scale: f64 },
}

/// Log-log least-squares fit of `R̄(t) ≍ t^α` near zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaFit {
    pub value: f64,
    pub std_err: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    /// Standard error above 0.05.
    pub inconclusive: bool,
}

/// Increment-variance function `R̄` with the quantities built on it.
///
/// `R̄` evaluations are memoized; cached and uncached values are identical.
pub struct CovarianceModel {
    source: CovarianceSource,
    g_norm_sq: Option<f64>,
    alpha_fit: Option<AlphaFit>,
    quad: QuadConfig,
    cache: Mutex<HashMap<u64, f64>>,
}

impl std::fmt::Debug for CovarianceModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CovarianceModel")
            .field("source", &self.source)
            .field("g_norm_sq", &self.g_norm_sq)
            .field("alpha_fit", &self.alpha_fit)
            .field("quad", &self.quad)
            .finish()
    }
}

impl Clone for CovarianceModel {
    fn clone(&self) -> Self {
        let cache = self.cache.lock().map(|c| c.clone()).unwrap_or_default();
        Self {
            source: self.source.clone(),
            g_norm_sq: self.g_norm_sq,
            alpha_fit: self.alpha_fit,
            quad: self.quad,
            cache: Mutex::new(cache),
        }
    }
}

const FIT_T_LO: f64 = 1e-4;
const FIT_T_HI: f64 = 1e-2;
const FIT_POINTS: usize = 21;
const FIT_SE_LIMIT: f64 = 0.05;

/// Validates `spec`, computes `‖g‖²` and fits the local exponent of `R̄` at zero.
pub fn build_covariance(spec: &KernelSpec, cfg: &QuadConfig) -> Result<CovarianceModel> {
    spec.validate()?;
    let mut model = CovarianceModel {
        g_norm_sq: Some(spec.norm_sq()),
        source: CovarianceSource::Kernel(spec.clone()),
        alpha_fit: None,
        quad: *cfg,
        cache: Mutex::new(HashMap::new()),
    };
    model.alpha_fit = Some(model.fit_alpha(FIT_T_LO, FIT_T_HI)?);
    Ok(model)
}

impl CovarianceModel {
    /// `R̄(t) = scale·t^α` with α in (0, 2).
    pub fn power_law(alpha: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::domain(format!("alpha={alpha} must lie in (0, 2)")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::validation("scale must be positive"));
        }
        Ok(Self {
            source: CovarianceSource::PowerLaw { alpha, scale },
            g_norm_sq: None,
            alpha_fit: Some(AlphaFit { value: alpha, std_err: 0.0, t_lo: FIT_T_LO, t_hi: FIT_T_HI, inconclusive: false }),
            quad: QuadConfig::default(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Brownian motion: `R̄(t) = t`.
    pub fn brownian() -> Self {
        Self::power_law(1.0, 1.0).expect("valid parameters")
    }

    pub fn source(&self) -> &CovarianceSource {
        &self.source
    }

    pub fn kernel(&self) -> Option<&KernelSpec> {
        match &self.source {
            CovarianceSource::Kernel(k) => Some(k),
            CovarianceSource::PowerLaw { .. } => None,
        }
    }

    /// `∫g²`; `None` for the non-stationary power-law models.
    pub fn g_norm_sq(&self) -> Option<f64> {
        self.g_norm_sq
    }

    pub fn quad_config(&self) -> &QuadConfig {
        &self.quad
    }

    pub fn alpha_fit(&self) -> Option<AlphaFit> {
        self.alpha_fit
    }

    /// The index used for limit correlations: declared by the family when known,
    /// otherwise the fitted slope.
    pub fn alpha(&self) -> Option<f64> {
        match &self.source {
            CovarianceSource::PowerLaw { alpha, .. } => Some(*alpha),
            CovarianceSource::Kernel(k) => k.declared_alpha().or(self.alpha_fit.map(|f| f.value)),
        }
    }

    pub fn id(&self) -> String {
        match &self.source {
            CovarianceSource::Kernel(k) => k.id(),
            CovarianceSource::PowerLaw { alpha, scale } => format!("power(alpha={alpha},scale={scale})"),
        }
    }

    /// `R̄(t) = E[(G_{s+t} − G_s)²]`, symmetric in `t`.
    pub fn rbar(&self, t: f64) -> Result<f64> {
        let t = t.abs();
        if t == 0.0 {
            return Ok(0.0);
        }
        if !t.is_finite() {
            return Err(Error::domain("R̄ evaluated at a non-finite lag"));
        }
        match &self.source {
            CovarianceSource::PowerLaw { alpha, scale } => Ok(scale * t.powf(*alpha)),
            CovarianceSource::Kernel(spec) => {
                let key = t.to_bits();
                if let Some(v) = self.cache.lock().expect("cache poisoned").get(&key) {
                    return Ok(*v);
                }
                let v = rbar_from_kernel(spec, t, &self.quad)?;
                self.cache.lock().expect("cache poisoned").insert(key, v);
                Ok(v)
            }
        }
    }

    /// `τ_n = √R̄(1/n)`.
    pub fn tau_n(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::validation("n must be positive"));
        }
        Ok(self.rbar(1.0 / n as f64)?.sqrt())
    }

    /// `r_n(j) = (R̄((j+1)/n) + R̄((j−1)/n) − 2R̄(j/n)) / (2τ_n²)`.
    pub fn r_n(&self, n: usize, j: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::validation("n must be positive"));
        }
        if j == 0 {
            return Ok(1.0);
        }
        let nf = n as f64;
        let jf = j as f64;
        let tau2 = self.rbar(1.0 / nf)?;
        let num = self.rbar((jf + 1.0) / nf)? + self.rbar((jf - 1.0) / nf)? - 2.0 * self.rbar(jf / nf)?;
        Ok(num / (2.0 * tau2))
    }

    /// `[r_n(0), …, r_n(j_max)]`, evaluating `R̄` in parallel.
    pub fn r_n_table(&self, n: usize, j_max: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::validation("n must be positive"));
        }
        let nf = n as f64;
        let rb: Vec<f64> = (0..=j_max + 1)
            .into_par_iter()
            .map(|k| self.rbar(k as f64 / nf))
            .collect::<Result<_>>()?;
        let tau2 = rb[1];
        let mut out = Vec::with_capacity(j_max + 1);
        out.push(1.0);
        for j in 1..=j_max {
            out.push((rb[j + 1] + rb[j - 1] - 2.0 * rb[j]) / (2.0 * tau2));
        }
        Ok(out)
    }

    /// Increment autocovariances `γ(j) = τ_n² r_n(j)` for `j < len`.
    pub fn increment_autocov(&self, n: usize, len: usize) -> Result<Vec<f64>> {
        let tau2 = self.tau_n(n)?.powi(2);
        let r = self.r_n_table(n, len.saturating_sub(1))?;
        Ok(r.into_iter().take(len).map(|v| v * tau2).collect())
    }

    /// `r(t) = 1 − R̄(t)/(2‖g‖²)` for stationary models.
    pub fn autocorrelation(&self, t: f64) -> Result<f64> {
        let norm = self
            .g_norm_sq
            .ok_or_else(|| Error::domain("power-law models have no stationary autocorrelation"))?;
        Ok(1.0 - self.rbar(t)? / (2.0 * norm))
    }

    /// `R̄` through the autocovariance route `2(‖g‖² − ∫g(u)g(u+t)du)`.
    pub fn rbar_via_autocovariance(&self, t: f64) -> Result<f64> {
        match &self.source {
            CovarianceSource::PowerLaw { .. } => self.rbar(t),
            CovarianceSource::Kernel(spec) => {
                let c = kernel_autocovariance(spec, t.abs(), &QuadConfig::tight())?;
                Ok((2.0 * (spec.norm_sq() - c)).max(0.0))
            }
        }
    }

    /// Least-squares slope of `log R̄` against `log t` on log-spaced points in `[t_lo, t_hi]`.
    pub fn fit_alpha(&self, t_lo: f64, t_hi: f64) -> Result<AlphaFit> {
        if !(t_lo > 0.0 && t_hi > t_lo) {
            return Err(Error::validation("alpha fit needs 0 < t_lo < t_hi"));
        }
        let pts: Vec<(f64, f64)> = (0..FIT_POINTS)
            .into_par_iter()
            .map(|i| {
                let lt = t_lo.ln() + (t_hi / t_lo).ln() * i as f64 / (FIT_POINTS - 1) as f64;
                self.rbar(lt.exp()).map(|r| (lt, r.ln()))
            })
            .collect::<Result<_>>()?;
        let (slope, se) = ls_slope(&pts);
        Ok(AlphaFit { value: slope, std_err: se, t_lo, t_hi, inconclusive: !(se <= FIT_SE_LIMIT) })
    }
}

/// Slope and its standard error for simple linear regression.
pub(crate) fn ls_slope(pts: &[(f64, f64)]) -> (f64, f64) {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - icept - slope * p.0).powi(2)).sum();
    let se = if pts.len() > 2 { (ssr / (m - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, se)
}

/// Sorted, deduplicated knots restricted to `[lo, hi]`.
pub(crate) fn knots_within(mut pts: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    pts.retain(|&x| x > lo && x < hi);
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1e-300));
    pts
}

/// Geometric knots `base·2^k` inside `(lo, hi)`, for integrands varying on scale `base`.
pub(crate) fn geometric_knots(base: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut x = base;
    while x < hi {
        if x > lo {
            out.push(x);
        }
        x *= 2.0;
    }
    out
}

/// Integrates over consecutive knots, grading the pieces that start at a singular point.
pub(crate) fn integrate_knots<F: FnMut(f64) -> f64>(
    mut f: F,
    knots: &[f64],
    singular: &[f64],
    q: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let graded = singular.iter().any(|&s| (a - s).abs() <= 1e-15 * s.abs().max(1e-300));
        let r = if graded {
            integrate_left_graded(&mut f, a, b, q, cfg)?
        } else {
            integrate(&mut f, a, b, cfg)?
        };
        total += r.value;
    }
    Ok(total)
}

fn rbar_from_kernel(spec: &KernelSpec, t: f64, cfg: &QuadConfig) -> Result<f64> {
    let end = spec.support_end();
    if spec.has_compact_support() && t >= end {
        return Ok(2.0 * spec.norm_sq());
    }
    let q = spec.grading_exponent();
    let bps = spec.breakpoints();

    // ∫_0^t g²
    let head_hi = t.min(end);
    let head_knots = knots_within(bps.clone(), 0.0, head_hi);
    let head = integrate_knots(|x| spec.value(x).powi(2), &head_knots, &[0.0], q, cfg)?;

    // ∫_0^∞ (g(t+x) − g(x))²; both terms vanish beyond the support end
    let mut pts = geometric_knots(t, 0.0, end);
    for &b in &bps {
        pts.push(b);
        pts.push(b - t);
    }
    let knots = knots_within(pts, 0.0, end);
    let body = integrate_knots(|x| (spec.value(t + x) - spec.value(x)).powi(2), &knots, &[0.0], q, cfg)?;
    Ok(head + body)
}

/// `∫_0^∞ g(u) g(u+t) du`.
fn kernel_autocovariance(spec: &KernelSpec, t: f64, cfg: &QuadConfig) -> Result<f64> {
    let end = spec.support_end();
    if spec.has_compact_support() && t >= end {
        return Ok(0.0);
    }
    let e = spec.small_exponent();
    let q = if e < 0.0 { (1.0 / (1.0 + e)).min(12.0) } else { spec.grading_exponent() };
    let mut pts = geometric_knots(t.max(1e-12), 0.0, end - t);
    for &b in &spec.breakpoints() {
        pts.push(b);
        pts.push(b - t);
    }
    let knots = knots_within(pts, 0.0, end - t);
    integrate_knots(|u| spec.value(u) * spec.value(u + t), &knots, &[0.0], q, cfg)
}

/// `R̄(t) = 2‖g‖²(1 − r(t))` for the Gamma kernel with `r` from its closed-form integral
/// `r(t) = (2λ)^{2ν−1}/Γ(2ν−1) e^{−λt} ∫_0^∞ (t+u)^{ν−1} u^{ν−1} e^{−2λu} du`.
pub fn gamma_rbar_via_autocorrelation(spec: &KernelSpec, t: f64) -> Result<f64> {
    let (nu, lambda) = match spec.family {
        KernelFamily::Gamma { nu, lambda } => (nu, lambda),
        _ => return Err(Error::validation("autocorrelation route is specific to the gamma kernel")),
    };
    spec.validate()?;
    let t = t.abs();
    if t == 0.0 {
        return Ok(0.0);
    }
    let cfg = QuadConfig::tight();
    let upper = t + (60.0 + 20.0 * nu) / lambda;
    let pts = geometric_knots(t.min(1.0 / lambda), 0.0, upper);
    let knots = knots_within(pts, 0.0, upper);
    let e = nu - 1.0;
    let q = if e < 0.0 { (1.0 / (1.0 + e)).min(12.0) } else if e > 0.0 && e < 1.0 { 2.0 } else { 1.0 };
    let integral = integrate_knots(
        |u| (t + u).powf(nu - 1.0) * u.powf(nu - 1.0) * (-2.0 * lambda * u).exp(),
        &knots,
        &[0.0],
        q,
        &cfg,
    )?;
    let r = (2.0 * lambda).powf(2.0 * nu - 1.0) / gamma(2.0 * nu - 1.0) * (-lambda * t).exp() * integral;
    Ok(2.0 * spec.norm_sq() * (1.0 - r))
}
