use super::{check_grid, PathBundle, PathMeta};
use crate::error::Result;
use crate::kernels::CovarianceModel;
use crate::numerics::circulant::StationarySampler;
use crate::rng::{stream, Purpose};

/// Exact sampler of the Gaussian core on `i/n`: stationary increments with
/// autocovariance `τ_n² r_n(j)`, cumulated from `G(0) = 0`.
#[derive(Debug)]
pub struct GaussianCoreSampler {
    n: usize,
    horizon: f64,
    len: usize,
    model_id: String,
    increments: StationarySampler,
}

impl GaussianCoreSampler {
    pub fn new(model: &CovarianceModel, n: usize, horizon: f64) -> Result<Self> {
        let len = check_grid(n, horizon)?;
        let acov = model.increment_autocov(n, len - 1)?;
        let increments = StationarySampler::new(&acov)?;
        Ok(Self { n, horizon, len, model_id: model.id(), increments })
    }

    pub fn method(&self) -> String {
        format!("gaussian_core/{}", self.increments.method_name())
    }

    /// `G(i/n)` for replicate `replicate`.
    pub fn sample_path(&self, seed: u64, replicate: u64) -> Vec<f64> {
        self.sample_path_from(seed, replicate, Purpose::Innovations)
    }

    pub(crate) fn sample_path_from(&self, seed: u64, replicate: u64, purpose: Purpose) -> Vec<f64> {
        let mut rng = stream(seed, replicate, purpose);
        let dg = self.increments.sample(&mut rng);
        let mut g = Vec::with_capacity(self.len);
        let mut acc = 0.0;
        g.push(0.0);
        for d in dg {
            acc += d;
            g.push(acc);
        }
        g
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> PathBundle {
        let mut warnings = Vec::new();
        if self.increments.clipped() > 0 {
            warnings.push(format!("{} negative embedding eigenvalues clipped", self.increments.clipped()));
        }
        PathBundle {
            n: self.n,
            horizon: self.horizon,
            seed,
            g_path: Some(self.sample_path(seed, replicate)),
            sigma_path: None,
            y_path: None,
            drift_path: None,
            meta: PathMeta {
                kernel: Some(self.model_id.clone()),
                method: self.method(),
                replicate,
                warnings,
                ..Default::default()
            },
        }
    }
}

/// One exact draw of `G` on `i/n`, `i = 0..=⌊nT⌋`.
pub fn simulate_gaussian_core(model: &CovarianceModel, n: usize, horizon: f64, seed: u64) -> Result<PathBundle> {
    Ok(GaussianCoreSampler::new(model, n, horizon)?.sample(seed, 0))
}
