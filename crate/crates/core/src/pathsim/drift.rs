use super::{check_grid, default_truncation_depth, BssOptions, BssSampler, DetFn, PathBundle, VolatilityModel};
use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::numerics::quad::{integrate, integrate_left_graded, QuadConfig};
use crate::rng::Purpose;

/// Drift `Z₁` added on top of `Y`.
#[derive(Debug, Clone)]
pub enum DriftSpec {
    None,
    /// `Z₁(t) = ∫_0^t a(s) ds`.
    Lipschitz(DetFn),
    /// `Z₁(t) = ∫_{−M}^t q(t − s) a(s) ds`.
    SmootherBss { kernel: KernelSpec, a: DetFn },
    /// An independent Gaussian BSS path with kernel `q` and constant volatility `scale`.
    IndependentBss { kernel: KernelSpec, scale: f64 },
}

impl DriftSpec {
    pub fn label(&self) -> String {
        match self {
            DriftSpec::None => "none".into(),
            DriftSpec::Lipschitz(a) => format!("lipschitz({})", a.label()),
            DriftSpec::SmootherBss { kernel, a } => format!("smoother({},{})", kernel.id(), a.label()),
            DriftSpec::IndependentBss { kernel, scale } => format!("bss({},scale={scale})", kernel.id()),
        }
    }

    /// Exponent `a` with `E|Z₁(t) − Z₁(s)|² ≍ |t − s|^a`.
    pub fn increment_exponent(&self) -> Option<f64> {
        match self {
            DriftSpec::None => None,
            DriftSpec::Lipschitz(_) => Some(2.0),
            DriftSpec::SmootherBss { kernel, .. } => Some(2.0 * (1.0 + kernel.small_exponent()).min(1.0)),
            DriftSpec::IndependentBss { kernel, .. } => effective_alpha(kernel),
        }
    }

    /// Warning when the drift is not negligible against `R̄^{1/2}` of `main`.
    pub fn robustness_warning(&self, main: &KernelSpec) -> Option<String> {
        let drift = self.increment_exponent()?;
        let Some(alpha) = effective_alpha(main) else {
            return Some("cannot compare drift smoothness against a kernel without a known index".into());
        };
        (drift <= alpha).then(|| {
            format!("drift increments scale like |Δ|^{drift} which is not o(R̄) = o(|Δ|^{alpha}); limits may change")
        })
    }
}

/// Small-scale index of `R̄`, accounting for the jump at the end of truncated support.
fn effective_alpha(spec: &KernelSpec) -> Option<f64> {
    let a = spec.declared_alpha()?;
    let jumps = matches!(
        spec.family,
        KernelFamily::PowerLawTruncated { .. } | KernelFamily::ExponentialTruncated { .. }
    ) && spec.value(spec.support_end()) != 0.0;
    Some(if jumps { a.min(1.0) } else { a })
}

/// Prepared drift generator for a grid.
pub struct DriftSampler {
    spec: DriftSpec,
    fixed: Option<Vec<f64>>,
    bss: Option<BssSampler>,
}

impl DriftSampler {
    pub fn new(spec: &DriftSpec, n: usize, horizon: f64) -> Result<Self> {
        let len = check_grid(n, horizon)?;
        let times: Vec<f64> = (0..len).map(|i| i as f64 / n as f64).collect();
        let mut fixed = None;
        let mut bss = None;
        match spec {
            DriftSpec::None => {}
            DriftSpec::Lipschitz(a) => {
                let cfg = QuadConfig::default();
                let mut z = vec![0.0; len];
                for i in 1..len {
                    z[i] = z[i - 1] + integrate(|s| a.eval(s), times[i - 1], times[i], &cfg)?.value;
                }
                fixed = Some(z);
            }
            DriftSpec::SmootherBss { kernel, a } => {
                kernel.validate()?;
                let depth = default_truncation_depth(kernel);
                let z = times.iter().map(|&t| smoother_value(kernel, a, t, depth)).collect::<Result<_>>()?;
                fixed = Some(z);
            }
            DriftSpec::IndependentBss { kernel, scale } => {
                let vm = VolatilityModel::constant(*scale);
                bss = Some(BssSampler::new(kernel, &vm, n, horizon, &BssOptions::default())?);
            }
        }
        Ok(Self { spec: spec.clone(), fixed, bss })
    }

    /// `Z₁` on the grid, or `None` for no drift.
    pub fn path(&self, seed: u64, replicate: u64) -> Option<Vec<f64>> {
        if let Some(z) = &self.fixed {
            return Some(z.clone());
        }
        self.bss.as_ref().map(|b| b.sample_from(seed, replicate, Purpose::Drift).y_path.unwrap_or_default())
    }

    pub fn spec(&self) -> &DriftSpec {
        &self.spec
    }
}

/// `∫_0^{M+t} q(x) a(t − x) dx`.
fn smoother_value(q: &KernelSpec, a: &DetFn, t: f64, depth: f64) -> Result<f64> {
    let end = (depth + t).min(q.support_end());
    let mut knots = vec![0.0];
    knots.extend(q.breakpoints().into_iter().filter(|&b| b > 0.0 && b < end));
    knots.push(end);
    let cfg = QuadConfig::default();
    let f = |x: f64| q.value(x) * a.eval(t - x);
    let mut total = 0.0;
    for (k, w) in knots.windows(2).enumerate() {
        total += if k == 0 {
            integrate_left_graded(f, w[0], w[1], q.grading_exponent(), &cfg)?.value
        } else {
            integrate(f, w[0], w[1], &cfg)?.value
        };
    }
    Ok(total)
}

/// Adds `Z₁` to `y_path`, keeping the drift separately in `drift_path`.
///
/// With `kernel` given, a robustness warning is recorded when the drift is too
/// rough to be negligible.
pub fn add_drift(mut bundle: PathBundle, drift: &DriftSpec, kernel: Option<&KernelSpec>) -> Result<PathBundle> {
    if matches!(drift, DriftSpec::None) {
        return Ok(bundle);
    }
    let sampler = DriftSampler::new(drift, bundle.n, bundle.horizon)?;
    let z = sampler.path(bundle.seed, bundle.meta.replicate).unwrap_or_default();
    let y = bundle
        .y_path
        .as_mut()
        .ok_or_else(|| Error::validation("bundle has no y_path to add a drift to"))?;
    if y.len() != z.len() {
        return Err(Error::validation("drift and path lengths differ"));
    }
    y.iter_mut().zip(&z).for_each(|(y, z)| *y += z);
    if let Some(w) = kernel.and_then(|k| drift.robustness_warning(k)) {
        bundle.meta.warnings.push(w);
    }
    bundle.meta.drift = Some(drift.label());
    bundle.drift_path = Some(z);
    Ok(bundle)
}
