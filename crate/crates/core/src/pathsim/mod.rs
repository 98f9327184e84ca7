//! Path synthesis: the Gaussian core `G`, volatility `σ`, drifts and full BSS paths
//! `Y` on the grid `i/n`, `i = 0..=⌊nT⌋`.
//!
//! Randomness follows the stream-splitting rule of [`crate::rng`]: replicate `r`
//! under master seed `s` draws innovations, volatility noise and drift noise from
//! three disjoint ChaCha8 streams, so a bundle is a pure function of
//! `(configuration, s, r)`.

mod bss;
mod core_sampler;
mod drift;
mod io;
mod volatility;

pub use bss::{default_truncation_depth, simulate_bss, BssOptions, BssSampler};
pub use core_sampler::{simulate_gaussian_core, GaussianCoreSampler};
pub use drift::{add_drift, DriftSampler, DriftSpec};
pub use io::{read_binary, read_csv, write_binary, write_csv};
pub use volatility::{DetFn, VolatilityFamily, VolatilityModel, VolatilitySampler};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::numerics::quad::{integrate, QuadConfig};
use crate::rng::{stream, Purpose};

/// Simulation provenance stored with every bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PathMeta {
    pub kernel: Option<String>,
    pub volatility: Option<String>,
    /// Length of the simulated past window, in time units.
    pub truncation_depth: Option<f64>,
    /// Fine steps per coarse step.
    pub subgrid: Option<usize>,
    /// `gaussian_core/circulant`, `gaussian_core/dense` or `riemann_fft`.
    pub method: String,
    /// Kernel-weight rescaling that matches the discrete increment variance to `τ_n²`.
    pub calibration_factor: Option<f64>,
    /// `∫_M^∞ g² / ∫_0^∞ g²`.
    pub tail_energy: Option<f64>,
    pub drift: Option<String>,
    pub replicate: u64,
    pub warnings: Vec<String>,
}

/// Sampled paths on the grid `i/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBundle {
    pub n: usize,
    pub horizon: f64,
    pub seed: u64,
    pub g_path: Option<Vec<f64>>,
    pub sigma_path: Option<Vec<f64>>,
    pub y_path: Option<Vec<f64>>,
    pub drift_path: Option<Vec<f64>>,
    pub meta: PathMeta,
}

impl PathBundle {
    /// Number of grid points `⌊nT⌋ + 1`.
    pub fn len(&self) -> usize {
        grid_points(self.n, self.horizon)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 / self.n as f64).collect()
    }

    /// The observed series: `Y` when present, otherwise `G`.
    pub fn series(&self) -> Option<&[f64]> {
        self.y_path.as_deref().or(self.g_path.as_deref())
    }
}

/// `⌊nT⌋ + 1`, robust to `nT` landing a hair below an integer.
pub fn grid_points(n: usize, horizon: f64) -> usize {
    ((n as f64 * horizon) + 1e-9).floor() as usize + 1
}

pub(crate) fn check_grid(n: usize, horizon: f64) -> Result<usize> {
    if n == 0 || !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::validation("grid needs n ≥ 1 and a positive finite horizon"));
    }
    let len = grid_points(n, horizon);
    if len < 3 {
        return Err(Error::validation("grid must contain at least two increments (⌊nT⌋ ≥ 2)"));
    }
    Ok(len)
}

/// `σ` on the grid `i/n`.
pub fn simulate_volatility(vm: &VolatilityModel, n: usize, horizon: f64, seed: u64) -> Result<PathBundle> {
    simulate_volatility_replicate(vm, n, horizon, seed, 0)
}

pub fn simulate_volatility_replicate(
    vm: &VolatilityModel,
    n: usize,
    horizon: f64,
    seed: u64,
    replicate: u64,
) -> Result<PathBundle> {
    let len = check_grid(n, horizon)?;
    let sampler = VolatilitySampler::new(vm, 0.0, 1.0 / n as f64, len)?;
    let sigma = sampler.sample(&mut stream(seed, replicate, Purpose::Volatility));
    Ok(PathBundle {
        n,
        horizon,
        seed,
        g_path: None,
        sigma_path: Some(sigma),
        y_path: None,
        drift_path: None,
        meta: PathMeta {
            volatility: Some(vm.id()),
            method: "volatility".into(),
            replicate,
            ..Default::default()
        },
    })
}

/// Whether `F_t = ∫_1^∞ (g'(s))² σ²_{t−s} ds` has finite expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitenessReport {
    pub finite: bool,
    /// `∫_1^∞ (g')²` (the value of `E F_t` for unit volatility).
    pub derivative_energy: f64,
    pub reason: String,
}

pub fn finiteness_diagnostic(spec: &KernelSpec, vm: &VolatilityModel) -> Result<FinitenessReport> {
    spec.validate()?;
    vm.validate()?;
    let vol_note = if vm.is_deterministic() {
        "volatility is bounded on compacts"
    } else {
        "exp-fractional volatility has finite second moments at every time"
    };
    if spec.has_compact_support() && spec.support_end() <= 1.0 {
        return Ok(FinitenessReport {
            finite: true,
            derivative_energy: 0.0,
            reason: format!("g' vanishes on (1, ∞) (support ends at {}); {vol_note}", spec.support_end()),
        });
    }
    let end = spec.support_end().max(1.0);
    let mut pts = vec![1.0];
    pts.extend(spec.breakpoints().into_iter().filter(|&b| b > 1.0 && b < end));
    pts.push(end);
    let cfg = QuadConfig::tight();
    let mut energy = 0.0;
    for w in pts.windows(2) {
        energy += integrate(|s| spec.derivative(s).powi(2), w[0], w[1], &cfg)?.value;
    }
    let reason = match spec.family {
        KernelFamily::Gamma { .. } => format!("gamma kernel derivative is square integrable on (1, ∞); {vol_note}"),
        _ => format!("derivative energy computed by quadrature; {vol_note}"),
    };
    Ok(FinitenessReport { finite: energy.is_finite(), derivative_energy: energy, reason })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_affine_volatility() {
        let b = simulate_volatility(&VolatilityModel::constant(2.0), 16, 1.0, 3).unwrap();
        assert!(b.sigma_path.unwrap().iter().all(|v| *v == 2.0));
        let b = simulate_volatility(&VolatilityModel::deterministic(DetFn::Affine { a: 1.0, b: 1.0 }), 16, 1.0, 3).unwrap();
        for (i, v) in b.sigma_path.unwrap().iter().enumerate() {
            assert_eq!(*v, 1.0 + i as f64 / 16.0);
        }
    }

    #[test]
    fn grid_length_contract() {
        assert_eq!(grid_points(1024, 1.0), 1025);
        assert_eq!(grid_points(10, 0.3), 4);
        assert!(check_grid(1, 1.0).is_err());
    }

    #[test]
    fn finiteness_for_builtins() {
        let vm = VolatilityModel::constant(1.0);
        assert!(finiteness_diagnostic(&KernelSpec::power_law(-0.3), &vm).unwrap().finite);
        assert!(finiteness_diagnostic(&KernelSpec::exponential(1.0), &vm).unwrap().finite);
        let r = finiteness_diagnostic(&KernelSpec::gamma(0.75, 1.0), &vm).unwrap();
        assert!(r.finite);
        // ∫_1^∞ (g')² for g = x^{−1/4} e^{−x}, computed on a plain grid as an independent check
        let g = KernelSpec::gamma(0.75, 1.0);
        let h = 1e-4;
        let mut s = 0.0;
        let mut x = 1.0 + 0.5 * h;
        while x < 60.0 {
            s += g.derivative(x).powi(2) * h;
            x += h;
        }
        assert!((r.derivative_energy - s).abs() < 1e-6 * s, "{} vs {s}", r.derivative_energy);
    }
}
