use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::circulant::{fgn_autocov, StationarySampler};

/// A deterministic positive function of time.
#[derive(Clone)]
pub enum DetFn {
    /// `a + b·t`.
    Affine { a: f64, b: f64 },
    /// `a + b·sin(ω t)`.
    Sine { a: f64, b: f64, omega: f64 },
    /// Arbitrary function with a label for metadata and a Lipschitz claim.
    Custom { label: String, f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, lipschitz: bool },
}

impl DetFn {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            DetFn::Affine { a, b } => a + b * t,
            DetFn::Sine { a, b, omega } => a + b * (omega * t).sin(),
            DetFn::Custom { f, .. } => f(t),
        }
    }

    pub fn is_lipschitz(&self) -> bool {
        match self {
            DetFn::Custom { lipschitz, .. } => *lipschitz,
            _ => true,
        }
    }

    pub fn label(&self) -> String {
        match self {
            DetFn::Affine { a, b } => format!("affine(a={a},b={b})"),
            DetFn::Sine { a, b, omega } => format!("sine(a={a},b={b},omega={omega})"),
            DetFn::Custom { label, .. } => label.clone(),
        }
    }

    /// `∫_a^b f(t)^p dt` by composite Simpson on 2000 panels.
    pub fn integrate_power(&self, a: f64, b: f64, p: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let m = 2000;
        let h = (b - a) / m as f64;
        let f = |t: f64| self.eval(t).abs().powf(p);
        let mut s = f(a) + f(b);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }
}

impl fmt::Debug for DetFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone)]
pub enum VolatilityFamily {
    Constant(f64),
    DeterministicFn(DetFn),
    /// `σ_t = exp(X_t − ½Var X_t)` where `X` is `vol_of_vol` times a two-sided fractional
    /// Brownian motion with Hurst `hurst` pinned at `X_0 = 0`. With `mean_rev > 0`, `X` is
    /// instead the Euler-discretized Ornstein–Uhlenbeck process driven by fractional noise,
    /// started at zero at the left end of the simulation window.
    ExpFractional { hurst: f64, vol_of_vol: f64, mean_rev: f64 },
}

#[derive(Debug, Clone)]
pub struct VolatilityModel {
    pub family: VolatilityFamily,
    /// Hölder-type exponent of `σ` in moment sense.
    pub gamma_vol: f64,
}

impl VolatilityModel {
    pub fn constant(c: f64) -> Self {
        Self { family: VolatilityFamily::Constant(c), gamma_vol: 1.0 }
    }

    pub fn deterministic(f: DetFn) -> Self {
        Self { family: VolatilityFamily::DeterministicFn(f), gamma_vol: 1.0 }
    }

    pub fn exp_fractional(hurst: f64, vol_of_vol: f64, mean_rev: f64) -> Self {
        Self { family: VolatilityFamily::ExpFractional { hurst, vol_of_vol, mean_rev }, gamma_vol: hurst }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.family {
            VolatilityFamily::Constant(c) => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::validation(format!("constant volatility {c} must be positive")));
                }
            }
            VolatilityFamily::DeterministicFn(_) => {}
            VolatilityFamily::ExpFractional { hurst, vol_of_vol, mean_rev } => {
                if !(*hurst > 0.5 && *hurst < 1.0) {
                    return Err(Error::validation(format!("hurst={hurst} must lie in (1/2, 1)")));
                }
                if !(*vol_of_vol > 0.0 && vol_of_vol.is_finite()) {
                    return Err(Error::validation("vol_of_vol must be positive"));
                }
                if !(*mean_rev >= 0.0 && mean_rev.is_finite()) {
                    return Err(Error::validation("mean_rev must be non-negative"));
                }
            }
        }
        if !(self.gamma_vol > 0.0 && self.gamma_vol <= 1.0) {
            return Err(Error::validation("gamma_vol must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn id(&self) -> String {
        match &self.family {
            VolatilityFamily::Constant(c) => format!("const({c})"),
            VolatilityFamily::DeterministicFn(f) => f.label(),
            VolatilityFamily::ExpFractional { hurst, vol_of_vol, mean_rev } => {
                format!("expfrac(H={hurst},vol_of_vol={vol_of_vol},mean_rev={mean_rev})")
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.family, VolatilityFamily::Constant(_))
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self.family, VolatilityFamily::ExpFractional { .. })
    }
}

/// Prepared sampler of `σ` on the grid `start + k·step`, `k = 0..len`.
pub struct VolatilitySampler {
    model: VolatilityModel,
    start: f64,
    step: f64,
    len: usize,
    noise: Option<StationarySampler>,
    /// `Var X_k` for the exponential-fractional family.
    variance: Vec<f64>,
    /// Grid index pinned to zero; the one closest to `t = 0`.
    anchor: usize,
}

impl VolatilitySampler {
    pub fn new(model: &VolatilityModel, start: f64, step: f64, len: usize) -> Result<Self> {
        model.validate()?;
        if len == 0 || !(step > 0.0) {
            return Err(Error::validation("volatility grid must be non-empty with positive step"));
        }
        let mut noise = None;
        let mut variance = Vec::new();
        let anchor = ((-start / step).round().max(0.0) as usize).min(len - 1);
        match &model.family {
            VolatilityFamily::DeterministicFn(f) => {
                for k in 0..len {
                    let t = start + k as f64 * step;
                    let v = f.eval(t);
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(Error::validation(format!(
                            "deterministic volatility {} is not positive at t={t}",
                            f.label()
                        )));
                    }
                }
            }
            VolatilityFamily::ExpFractional { hurst, vol_of_vol, mean_rev } => {
                if len > 1 {
                    let scale = step.powf(2.0 * hurst);
                    let acov: Vec<f64> = fgn_autocov(*hurst, len - 1).into_iter().map(|v| v * scale).collect();
                    variance = if *mean_rev > 0.0 {
                        euler_variance(&acov, *vol_of_vol, 1.0 - mean_rev * step, len)
                    } else {
                        (0..len)
                            .map(|k| (vol_of_vol * vol_of_vol) * ((k.abs_diff(anchor) as f64) * step).powf(2.0 * hurst))
                            .collect()
                    };
                    noise = Some(StationarySampler::new(&acov)?);
                } else {
                    variance = vec![0.0];
                }
            }
            VolatilityFamily::Constant(_) => {}
        }
        Ok(Self { model: model.clone(), start, step, len, noise, variance, anchor })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.model.family {
            VolatilityFamily::Constant(c) => vec![*c; self.len],
            VolatilityFamily::DeterministicFn(f) => {
                (0..self.len).map(|k| f.eval(self.start + k as f64 * self.step)).collect()
            }
            VolatilityFamily::ExpFractional { vol_of_vol, mean_rev, .. } if *mean_rev == 0.0 => {
                let mut x = vec![0.0; self.len];
                if let Some(noise) = &self.noise {
                    for (k, d) in noise.sample(rng).iter().enumerate() {
                        x[k + 1] = x[k] + vol_of_vol * d;
                    }
                }
                let pin = x[self.anchor];
                x.iter().zip(&self.variance).map(|(v, var)| (v - pin - 0.5 * var).exp()).collect()
            }
            VolatilityFamily::ExpFractional { vol_of_vol, mean_rev, .. } => {
                let phi = 1.0 - mean_rev * self.step;
                let mut out = Vec::with_capacity(self.len);
                let mut x = 0.0;
                out.push(1.0);
                if let Some(noise) = &self.noise {
                    let db = noise.sample(rng);
                    for (k, d) in db.iter().enumerate() {
                        // X_{k+1} = φ X_k + ν ΔB_k; left-point increments keep σ adapted
                        x = phi * x + vol_of_vol * d;
                        out.push((x - 0.5 * self.variance[k + 1]).exp());
                    }
                }
                out
            }
        }
    }
}

/// `Var X_k` for `X_{k+1} = φX_k + νΔB_k`, `X_0 = 0`, with `ΔB` stationary with autocovariance `acov`.
fn euler_variance(acov: &[f64], nu: f64, phi: f64, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    // c_k = Σ_{m=1}^{k} φ^{m−1} γ(m) so that Cov(X_k, ΔB_k) = ν c_k
    let mut c = 0.0;
    let mut phi_pow = 1.0;
    for k in 0..len - 1 {
        v[k + 1] = phi * phi * v[k] + 2.0 * phi * nu * nu * c + nu * nu * acov[0];
        if k + 1 < acov.len() {
            c += phi_pow * acov[k + 1];
        }
        phi_pow *= phi;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fbm_variance_recursion_is_exact() {
        let h = 0.75;
        let step: f64 = 0.01;
        let acov: Vec<f64> = fgn_autocov(h, 200).into_iter().map(|v| v * step.powf(2.0 * h)).collect();
        let v = euler_variance(&acov, 0.5, 1.0, 201);
        for k in [1usize, 10, 200] {
            let exact = 0.25 * (k as f64 * step).powf(2.0 * h);
            assert!((v[k] - exact).abs() < 1e-12, "k={k}: {} vs {exact}", v[k]);
        }
    }

    #[test]
    fn positivity_check() {
        let vm = VolatilityModel::deterministic(DetFn::Affine { a: 1.0, b: 1.0 });
        assert!(VolatilitySampler::new(&vm, -2.0, 0.1, 30).is_err());
        assert!(VolatilitySampler::new(&vm, 0.0, 0.1, 30).is_ok());
    }

    #[test]
    fn exp_fractional_has_unit_mean() {
        let vm = VolatilityModel::exp_fractional(0.75, 0.5, 0.0);
        let s = VolatilitySampler::new(&vm, 0.0, 1.0 / 64.0, 65).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let reps = 4000;
        let mut mean_end = 0.0;
        for _ in 0..reps {
            let p = s.sample(&mut rng);
            assert!(p.iter().all(|v| *v > 0.0));
            mean_end += p[64];
        }
        mean_end /= reps as f64;
        assert!((mean_end - 1.0).abs() < 0.05, "{mean_end}");
    }

    #[test]
    fn two_sided_fbm_is_pinned_at_zero() {
        let vm = VolatilityModel::exp_fractional(0.75, 0.5, 0.0);
        let s = VolatilitySampler::new(&vm, -1.0, 1.0 / 64.0, 129).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let reps = 4000;
        let mut log_var = 0.0;
        for _ in 0..reps {
            let p = s.sample(&mut rng);
            assert_eq!(p[64], 1.0);
            // log σ_{-1} = X − ½·0.25 with Var X = 0.25
            log_var += (p[0].ln() + 0.125).powi(2);
        }
        log_var /= reps as f64;
        assert!((log_var - 0.25).abs() < 0.02, "{log_var}");
    }

    #[test]
    fn mean_reversion_variance_is_bounded() {
        let acov: Vec<f64> = fgn_autocov(0.7, 5000).into_iter().map(|v| v * 0.01f64.powf(1.4)).collect();
        let v = euler_variance(&acov, 1.0, 1.0 - 2.0 * 0.01, 5001);
        assert!(v[5000] < 2.0 * v[2500] && v[5000] > 0.0);
    }
}
