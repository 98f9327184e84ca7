use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{check_grid, GaussianCoreSampler, PathBundle, PathMeta, VolatilityFamily, VolatilityModel, VolatilitySampler};
use crate::error::{Error, Result};
use crate::gaussmom::PowerVector;
use crate::kernels::{build_covariance, check_conditions, CovarianceModel, KernelSpec};
use crate::numerics::quad::{integrate_left_graded, QuadConfig};
use crate::rng::{stream, Purpose};

const TAIL_WARN: f64 = 1e-6;
const TAIL_TARGET: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BssOptions {
    /// Past window `M`; `None` picks [`default_truncation_depth`].
    pub truncation_depth: Option<f64>,
    /// Fine steps `s` per coarse step `1/n`.
    pub subgrid: usize,
    /// Rescale kernel weights so the discrete increment variance equals `τ_n²`.
    pub calibrate: bool,
    /// Use the Riemann–Itô sum even for constant volatility.
    pub force_riemann: bool,
    /// Also return `G` built from the same innovations.
    pub record_core: bool,
}

impl Default for BssOptions {
    fn default() -> Self {
        Self { truncation_depth: None, subgrid: 8, calibrate: true, force_riemann: false, record_core: false }
    }
}

/// Support end for compactly supported kernels; otherwise the depth where the
/// discarded tail energy drops below `1e−8`.
pub fn default_truncation_depth(spec: &KernelSpec) -> f64 {
    if spec.has_compact_support() {
        return spec.support_end();
    }
    let mut hi = 1.0;
    while spec.tail_energy(hi) > TAIL_TARGET {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if spec.tail_energy(mid) > TAIL_TARGET {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

struct Riemann {
    /// Fine steps in the past window.
    l: usize,
    /// Innovation cells.
    cells: usize,
    h: f64,
    spectrum: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    vol: VolatilitySampler,
}

enum Route {
    Core { core: GaussianCoreSampler, scale: f64 },
    Riemann(Box<Riemann>),
}

/// Prepared BSS simulator for a fixed configuration; draws replicate paths cheaply.
pub struct BssSampler {
    n: usize,
    horizon: f64,
    len: usize,
    subgrid: usize,
    depth: f64,
    record_core: bool,
    route: Route,
    meta: PathMeta,
}

impl BssSampler {
    pub fn new(spec: &KernelSpec, vm: &VolatilityModel, n: usize, horizon: f64, opts: &BssOptions) -> Result<Self> {
        spec.validate()?;
        vm.validate()?;
        let len = check_grid(n, horizon)?;
        if opts.subgrid == 0 {
            return Err(Error::validation("subgrid must be at least 1"));
        }
        let depth = opts.truncation_depth.unwrap_or_else(|| default_truncation_depth(spec));
        if !(depth > 0.0) {
            return Err(Error::validation("truncation depth must be positive"));
        }
        let mut warnings = Vec::new();
        let tail = spec.tail_energy(depth);
        if tail > TAIL_WARN {
            warnings.push(format!("truncation discards {tail:.3e} of the kernel energy"));
        }
        let pv = PowerVector::new(vec![2.0])?;
        if let Ok(rep) = check_conditions(spec, &[pv], vm.gamma_vol) {
            if !rep.lln_ok {
                warnings.push("kernel is outside the region where the law of large numbers is established".into());
            }
        }
        let model = build_covariance(spec, &QuadConfig::default())?;
        let mut meta = PathMeta {
            kernel: Some(spec.id()),
            volatility: Some(vm.id()),
            truncation_depth: Some(depth),
            subgrid: Some(opts.subgrid),
            tail_energy: Some(tail),
            warnings,
            ..Default::default()
        };

        let route = match (&vm.family, opts.force_riemann) {
            (VolatilityFamily::Constant(c), false) => {
                let core = GaussianCoreSampler::new(&model, n, horizon)?;
                meta.method = core.method();
                meta.truncation_depth = None;
                meta.subgrid = None;
                meta.tail_energy = None;
                Route::Core { core, scale: *c }
            }
            _ => {
                let s = opts.subgrid;
                let h = 1.0 / (n * s) as f64;
                let l = (depth / h - 1e-9).ceil().max(1.0) as usize;
                let cells = l + (len - 1) * s;
                let mut weights = kernel_weights(spec, l, h)?;
                if opts.calibrate {
                    let disc = discrete_increment_variance(&weights, s, h);
                    let target = model.tau_n(n)?.powi(2);
                    let factor = (target / disc).sqrt();
                    weights.iter_mut().for_each(|w| *w *= factor);
                    meta.calibration_factor = Some(factor);
                }
                let size = cells.next_power_of_two();
                let mut planner = FftPlanner::new();
                let forward = planner.plan_fft_forward(size);
                let inverse = planner.plan_fft_inverse(size);
                let mut spectrum = vec![Complex::new(0.0, 0.0); size];
                for (i, w) in weights.iter().enumerate() {
                    spectrum[i] = Complex::new(*w / size as f64, 0.0);
                }
                forward.process(&mut spectrum);
                let vol = VolatilitySampler::new(vm, -(l as f64) * h, h, cells + 1)?;
                meta.method = "riemann_fft".into();
                Route::Riemann(Box::new(Riemann { l, cells, h, spectrum, forward, inverse, vol }))
            }
        };
        Ok(Self { n, horizon, len, subgrid: opts.subgrid, depth, record_core: opts.record_core, route, meta })
    }

    /// Constant-volatility sampler `Y = scale·G` for a covariance-only model.
    pub fn from_covariance(model: &CovarianceModel, scale: f64, n: usize, horizon: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::validation("volatility scale must be positive"));
        }
        let len = check_grid(n, horizon)?;
        let core = GaussianCoreSampler::new(model, n, horizon)?;
        let meta = PathMeta {
            kernel: Some(model.id()),
            volatility: Some(format!("const({scale})")),
            method: core.method(),
            ..Default::default()
        };
        Ok(Self { n, horizon, len, subgrid: 1, depth: 0.0, record_core: false, route: Route::Core { core, scale }, meta })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn method(&self) -> &str {
        &self.meta.method
    }

    pub fn truncation_depth(&self) -> f64 {
        self.depth
    }

    pub fn subgrid(&self) -> usize {
        self.subgrid
    }

    pub fn calibration_factor(&self) -> Option<f64> {
        self.meta.calibration_factor
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> PathBundle {
        self.sample_from(seed, replicate, Purpose::Innovations)
    }

    /// Path plus running integrals `∫_0^{t_i} σ^p` for each `p` in `powers`.
    ///
    /// On the Riemann route the integrals are left-point sums over the fine grid,
    /// matching the volatility values that drive the simulated increments.
    pub fn sample_with_integrals(&self, seed: u64, replicate: u64, powers: &[f64]) -> (PathBundle, Vec<Vec<f64>>) {
        let (bundle, fine) = self.draw(seed, replicate, Purpose::Innovations);
        let ints = powers
            .iter()
            .map(|&p| match (&self.route, &fine) {
                (Route::Riemann(r), Some(sig)) => {
                    let s = self.subgrid;
                    let mut out = Vec::with_capacity(self.len);
                    let mut acc = 0.0;
                    out.push(0.0);
                    for i in 1..self.len {
                        for j in r.l + (i - 1) * s..r.l + i * s {
                            acc += sig[j].powf(p);
                        }
                        out.push(acc * r.h);
                    }
                    out
                }
                _ => {
                    let c = bundle.sigma_path.as_ref().map_or(1.0, |v| v[0]).powf(p);
                    (0..self.len).map(|i| c * i as f64 / self.n as f64).collect()
                }
            })
            .collect();
        (bundle, ints)
    }

    /// Like [`sample`](Self::sample) but drawing innovations from another stream.
    pub(crate) fn sample_from(&self, seed: u64, replicate: u64, purpose: Purpose) -> PathBundle {
        self.draw(seed, replicate, purpose).0
    }

    fn draw(&self, seed: u64, replicate: u64, purpose: Purpose) -> (PathBundle, Option<Vec<f64>>) {
        let mut meta = self.meta.clone();
        meta.replicate = replicate;
        let (g, sigma, y, fine) = match &self.route {
            Route::Core { core, scale } => {
                let g = core.sample_path_from(seed, replicate, purpose);
                let y = g.iter().map(|v| v * scale).collect();
                (Some(g), vec![*scale; self.len], y, None)
            }
            Route::Riemann(r) => self.sample_riemann(r, seed, replicate, purpose),
        };
        let bundle = PathBundle {
            n: self.n,
            horizon: self.horizon,
            seed,
            g_path: g,
            sigma_path: Some(sigma),
            y_path: Some(y),
            drift_path: None,
            meta,
        };
        (bundle, fine)
    }

    #[allow(clippy::type_complexity)]
    fn sample_riemann(
        &self,
        r: &Riemann,
        seed: u64,
        replicate: u64,
        purpose: Purpose,
    ) -> (Option<Vec<f64>>, Vec<f64>, Vec<f64>, Option<Vec<f64>>) {
        let sigma_fine = r.vol.sample(&mut stream(seed, replicate, Purpose::Volatility));
        let mut rng = stream(seed, replicate, purpose);
        let sq = r.h.sqrt();
        let size = r.spectrum.len();
        let mut buf = vec![Complex::new(0.0, 0.0); size];
        for j in 0..r.cells {
            let dw = sq * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
            // real part drives Y, imaginary part the unit-volatility core
            buf[j] = Complex::new(sigma_fine[j] * dw, if self.record_core { dw } else { 0.0 });
        }
        r.forward.process(&mut buf);
        for (b, w) in buf.iter_mut().zip(&r.spectrum) {
            *b *= *w;
        }
        r.inverse.process(&mut buf);
        let s = self.subgrid;
        let at = |i: usize| r.l + i * s - 1;
        let y = (0..self.len).map(|i| buf[at(i)].re).collect();
        let g = self.record_core.then(|| (0..self.len).map(|i| buf[at(i)].im).collect());
        let sigma = (0..self.len).map(|i| sigma_fine[r.l + i * s]).collect();
        (g, sigma, y, Some(sigma_fine))
    }
}

/// Weights `w_ℓ` of the cell `[t − (ℓ+1)h, t − ℓh)`: the RMS of `g` over the first
/// cell and the midpoint value elsewhere.
fn kernel_weights(spec: &KernelSpec, l: usize, h: f64) -> Result<Vec<f64>> {
    let mut w: Vec<f64> = (0..l).map(|i| spec.value((i as f64 + 0.5) * h)).collect();
    let first = integrate_left_graded(|x| spec.value(x).powi(2), 0.0, h, spec.grading_exponent(), &QuadConfig::tight())?;
    w[0] = (first.value / h).sqrt();
    Ok(w)
}

/// `h Σ_ℓ (w_ℓ − w_{ℓ−s})²`: variance of a coarse increment for unit volatility.
fn discrete_increment_variance(w: &[f64], s: usize, h: f64) -> f64 {
    let l = w.len();
    let get = |i: isize| if i >= 0 && (i as usize) < l { w[i as usize] } else { 0.0 };
    (0..(l + s) as isize).map(|i| (get(i) - get(i - s as isize)).powi(2)).sum::<f64>() * h
}

/// One BSS path `Y(i/n) = ∫_{−M}^{i/n} g(i/n − u) σ_u W(du)`.
pub fn simulate_bss(
    spec: &KernelSpec,
    vm: &VolatilityModel,
    n: usize,
    horizon: f64,
    seed: u64,
    opts: &BssOptions,
) -> Result<PathBundle> {
    Ok(BssSampler::new(spec, vm, n, horizon, opts)?.sample(seed, 0))
}
