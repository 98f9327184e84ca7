//! Exact synthesis of stationary Gaussian sequences.
//!
//! The autocovariance `γ(0..N)` is embedded in a circulant matrix of size
//! `2M` (M a power of two, `2M ≥ 2N`). Its eigenvalues are the DFT of the
//! first row; a complex Gaussian vector scaled by `sqrt(λ/2M)` and transformed
//! once more has real part with covariance `γ` (Davies–Harte / Wood–Chan).
//! Negative eigenvalues above `−1e−8·max λ` are clipped to zero; anything
//! more negative triggers a larger embedding and finally a dense Cholesky
//! factorization.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

const CLIP_REL: f64 = 1e-8;
const MAX_EMBED_DOUBLINGS: usize = 3;
const DENSE_LIMIT: usize = 6000;

enum Method {
    Circulant {
        sqrt_eig: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Dense {
        chol: DMatrix<f64>,
    },
}

/// Sampler for `N` consecutive values of a zero-mean stationary Gaussian sequence.
pub struct StationarySampler {
    len: usize,
    method: Method,
    clipped: usize,
}

impl std::fmt::Debug for StationarySampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StationarySampler")
            .field("len", &self.len)
            .field("method", &self.method_name())
            .field("clipped", &self.clipped)
            .finish()
    }
}

impl StationarySampler {
    /// `acov[j]` is the covariance at lag `j`; `acov.len()` is the sample length.
    pub fn new(acov: &[f64]) -> Result<Self> {
        let len = acov.len();
        if len == 0 {
            return Err(Error::validation("empty autocovariance"));
        }
        if !(acov[0] > 0.0) || acov.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("autocovariance must be finite with positive variance"));
        }
        let mut half = len.max(2).next_power_of_two();
        for _ in 0..=MAX_EMBED_DOUBLINGS {
            if let Some((sqrt_eig, fft, clipped)) = embed(acov, half) {
                return Ok(Self { len, method: Method::Circulant { sqrt_eig, fft }, clipped });
            }
            half *= 2;
        }
        if len > DENSE_LIMIT {
            return Err(Error::Simulation(format!(
                "circulant embedding has negative eigenvalues and {len} points exceed the dense fallback limit"
            )));
        }
        let cov = DMatrix::from_fn(len, len, |i, j| acov[i.abs_diff(j)]);
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Simulation("covariance is not positive definite".into()))?
            .l();
        Ok(Self { len, method: Method::Dense { chol }, clipped: 0 })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn method_name(&self) -> &'static str {
        match self.method {
            Method::Circulant { .. } => "circulant",
            Method::Dense { .. } => "dense",
        }
    }

    /// Number of negative eigenvalues that were clipped to zero.
    pub fn clipped(&self) -> usize {
        self.clipped
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.method {
            Method::Circulant { sqrt_eig, fft } => {
                let mut buf: Vec<Complex<f64>> = sqrt_eig
                    .iter()
                    .map(|&s| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex::new(s * re, s * im)
                    })
                    .collect();
                fft.process(&mut buf);
                buf.truncate(self.len);
                buf.into_iter().map(|c| c.re).collect()
            }
            Method::Dense { chol } => {
                let z = DVector::from_fn(self.len, |_, _| rng.sample::<f64, _>(StandardNormal));
                (chol * z).iter().copied().collect()
            }
        }
    }
}

fn embed(acov: &[f64], half: usize) -> Option<(Vec<f64>, Arc<dyn Fft<f64>>, usize)> {
    let size = 2 * half;
    let mut row = vec![Complex::new(0.0, 0.0); size];
    for (j, &c) in acov.iter().enumerate() {
        row[j] = Complex::new(c, 0.0);
        if j > 0 {
            row[size - j] = Complex::new(c, 0.0);
        }
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(size);
    fft.process(&mut row);
    let max = row.iter().map(|c| c.re).fold(0.0_f64, f64::max);
    let mut clipped = 0;
    let mut sqrt_eig = Vec::with_capacity(size);
    for c in &row {
        let mut lam = c.re;
        if lam < 0.0 {
            if lam < -CLIP_REL * max {
                return None;
            }
            lam = 0.0;
            clipped += 1;
        }
        sqrt_eig.push((lam / size as f64).sqrt());
    }
    Some((sqrt_eig, fft, clipped))
}

/// Autocovariance of fractional Gaussian noise with Hurst `h` and unit variance.
pub fn fgn_autocov(h: f64, len: usize) -> Vec<f64> {
    let a = 2.0 * h;
    (0..len)
        .map(|k| {
            let k = k as f64;
            0.5 * ((k + 1.0).powf(a) - 2.0 * k.powf(a) + (k - 1.0).abs().powf(a))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn empirical_acov(samples: &[Vec<f64>], lag: usize) -> f64 {
        let mut s = 0.0;
        let mut c = 0usize;
        for x in samples {
            for i in 0..x.len() - lag {
                s += x[i] * x[i + lag];
                c += 1;
            }
        }
        s / c as f64
    }

    #[test]
    fn reproduces_fgn_covariance() {
        let acov = fgn_autocov(0.8, 256);
        let sampler = StationarySampler::new(&acov).unwrap();
        assert_eq!(sampler.method_name(), "circulant");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let paths: Vec<_> = (0..400).map(|_| sampler.sample(&mut rng)).collect();
        for lag in 0..4 {
            let e = empirical_acov(&paths, lag);
            assert!((e - acov[lag]).abs() < 0.03, "lag {lag}: {e} vs {}", acov[lag]);
        }
    }

    #[test]
    fn white_noise_is_uncorrelated() {
        let mut acov = vec![0.0; 100];
        acov[0] = 2.0;
        let sampler = StationarySampler::new(&acov).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let paths: Vec<_> = (0..500).map(|_| sampler.sample(&mut rng)).collect();
        assert!((empirical_acov(&paths, 0) - 2.0).abs() < 0.05);
        assert!(empirical_acov(&paths, 1).abs() < 0.03);
    }

    #[test]
    fn non_embeddable_covariance_falls_back_to_dense() {
        // squared-exponential covariance cut off while still large: the zero-padded
        // circulant is indefinite but the Toeplitz matrix itself is fine
        let acov: Vec<f64> = (0..12)
            .map(|j| (-(j as f64 / 8.0).powi(2)).exp() + if j == 0 { 0.05 } else { 0.0 })
            .collect();
        let sampler = StationarySampler::new(&acov).unwrap();
        assert_eq!(sampler.method_name(), "dense");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let paths: Vec<_> = (0..4000).map(|_| sampler.sample(&mut rng)).collect();
        for lag in [0, 3, 11] {
            let e = empirical_acov(&paths, lag);
            assert!((e - acov[lag]).abs() < 0.06, "lag {lag}: {e} vs {}", acov[lag]);
        }
    }

    #[test]
    fn rejects_zero_variance() {
        assert!(StationarySampler::new(&[0.0, 0.0]).is_err());
    }
}
