//! Realised multipower variation
//! `V(X; p₁..p_k)_t^n = (1/(n τ_n^{p₊})) Σ_{i=1}^{⌊nt⌋−k+1} ∏_j |Δ_{i+j−1}X|^{p_j}`
//! and the realised variation ratio `RVR = (π/2)·V(X;1,1)/V(X;2,0)`.
//!
//! All statistics are evaluated from one prefix-sum pass over the window products,
//! so a whole reporting grid costs `O(len)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmom::{mixed_abs_moment, psi, GaussianBlockCov, PowerVector};
use crate::kernels::{rho, CovarianceModel};

/// Maximum number of report points on a default grid.
pub const MAX_REPORT_POINTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Centering {
    /// `E ∏|Δ_{j}G/τ_n|^{p_j}` with correlations `r_n(|i−j|)`.
    pub rho_n: f64,
    /// The same moment under the limiting correlations `ρ(|i−j|)`, when `α` is known.
    pub rho_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpvResult {
    pub pv: PowerVector,
    pub n: usize,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// `τ_n` used for normalization; `None` for semimartingale scaling.
    pub tau_used: Option<f64>,
    pub centering: Option<Centering>,
    /// `Σ ∏|Δ|^{p_j}` without normalization.
    pub raw: Vec<f64>,
}

impl MpvResult {
    /// Value at the last grid point.
    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    /// Attaches finite-`n` and limit centering constants from `model`.
    pub fn with_centering(mut self, model: &CovarianceModel) -> Result<Self> {
        let rho_n = centering(model, &self.pv, self.n, CenteringMode::FiniteN)?;
        let rho_limit = match model.alpha() {
            Some(a) if a > 0.0 && a < 2.0 => Some(centering(model, &self.pv, self.n, CenteringMode::Limit)?),
            _ => None,
        };
        self.centering = Some(Centering { rho_n, rho_limit });
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RvrResult {
    pub n: usize,
    pub t_grid: Vec<f64>,
    pub rvr_t: Vec<f64>,
    /// `ψ(r_n(1))`.
    pub psi_finite: Option<f64>,
    /// `ψ(ρ(1))`.
    pub psi_limit: Option<f64>,
    /// Raw `Σ|Δ_i||Δ_{i+1}|` at each grid point.
    pub raw_11: Vec<f64>,
    /// Raw `Σ|Δ_i|²` over the `k = 2` window.
    pub raw_20: Vec<f64>,
}

impl RvrResult {
    pub fn terminal(&self) -> f64 {
        *self.rvr_t.last().unwrap_or(&f64::NAN)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenteringMode {
    FiniteN,
    Limit,
}

/// `{1/n, 2/n, …, ⌊nT⌋/n}`, evenly thinned to at most [`MAX_REPORT_POINTS`] points
/// and always ending at the last observation.
pub fn default_t_grid(n: usize, increments: usize) -> Vec<f64> {
    let step = increments.div_ceil(MAX_REPORT_POINTS).max(1);
    let mut idx: Vec<usize> = (1..=increments).rev().step_by(step).collect();
    idx.reverse();
    idx.into_iter().map(|m| m as f64 / n as f64).collect()
}

fn increments(series: &[f64], k: usize) -> Result<Vec<f64>> {
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data(format!("series has a non-finite value at index {i}")));
    }
    if series.len() < k + 1 {
        return Err(Error::Data(format!("series of length {} is too short for a window of {k}", series.len())));
    }
    Ok(series.windows(2).map(|w| (w[1] - w[0]).abs()).collect())
}

/// Prefix sums `S[m] = Σ_{i=1}^{m−k+1} ∏_j |Δ_{i+j−1}|^{p_j}` for `m = 0..=N`.
fn prefix_raw(abs_inc: &[f64], pv: &PowerVector) -> Vec<f64> {
    let k = pv.k();
    let n_inc = abs_inc.len();
    let mut s = vec![0.0; n_inc + 1];
    for m in 1..=n_inc {
        s[m] = s[m - 1];
        if m >= k {
            let i0 = m - k;
            let mut prod = 1.0;
            for (j, p) in pv.powers.iter().enumerate() {
                if *p != 0.0 {
                    prod *= pow_abs(abs_inc[i0 + j], *p);
                }
            }
            s[m] += prod;
        }
    }
    s
}

#[inline]
fn pow_abs(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else {
        x.powf(p)
    }
}

fn grid_indices(n: usize, n_inc: usize, t_grid: &[f64]) -> Result<Vec<usize>> {
    t_grid
        .iter()
        .map(|&t| {
            if !(t >= 0.0) {
                return Err(Error::validation(format!("report time {t} must be non-negative")));
            }
            let m = (t * n as f64 + 1e-9).floor() as usize;
            if m > n_inc {
                return Err(Error::validation(format!("report time {t} lies beyond the series")));
            }
            Ok(m)
        })
        .collect()
}

fn raw_on_grid(series: &[f64], n: usize, pv: &PowerVector, t_grid: Option<&[f64]>) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::validation("n must be positive"));
    }
    let abs_inc = increments(series, pv.k())?;
    let grid = t_grid.map(<[f64]>::to_vec).unwrap_or_else(|| default_t_grid(n, abs_inc.len()));
    let idx = grid_indices(n, abs_inc.len(), &grid)?;
    let s = prefix_raw(&abs_inc, pv);
    Ok((grid, idx.into_iter().map(|m| s[m]).collect()))
}

/// Normalized multipower variation on `t_grid` (default grid when `None`).
pub fn multipower(series: &[f64], n: usize, pv: &PowerVector, tau: f64, t_grid: Option<&[f64]>) -> Result<MpvResult> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::validation(format!("tau={tau} must be positive")));
    }
    let (t_grid, raw) = raw_on_grid(series, n, pv, t_grid)?;
    let norm = n as f64 * tau.powf(pv.p_plus);
    let values = raw.iter().map(|r| r / norm).collect();
    Ok(MpvResult { pv: pv.clone(), n, t_grid, values, tau_used: Some(tau), centering: None, raw })
}

/// Semimartingale scaling `n^{p₊/2 − 1} Σ ∏|Δ|^{p_j}`.
pub fn bsm_scaled_multipower(series: &[f64], n: usize, pv: &PowerVector, t_grid: Option<&[f64]>) -> Result<MpvResult> {
    let (t_grid, raw) = raw_on_grid(series, n, pv, t_grid)?;
    let scale = (n as f64).powf(pv.p_plus / 2.0 - 1.0);
    let values = raw.iter().map(|r| r * scale).collect();
    Ok(MpvResult { pv: pv.clone(), n, t_grid, values, tau_used: None, centering: None, raw })
}

/// `τ̂_n` as the root mean squared increment of the series.
pub fn auto_tau(series: &[f64]) -> Result<f64> {
    let inc = increments(series, 1)?;
    let ms = inc.iter().map(|d| d * d).sum::<f64>() / inc.len() as f64;
    if ms > 0.0 {
        Ok(ms.sqrt())
    } else {
        Err(Error::Data("series has no variation; cannot estimate tau".into()))
    }
}

/// `E ∏_j |Z_j|^{p_j}` for a unit-variance Gaussian window with finite-`n` or limiting correlations.
pub fn centering(model: &CovarianceModel, pv: &PowerVector, n: usize, mode: CenteringMode) -> Result<f64> {
    let k = pv.k();
    let idx: Vec<usize> = (0..k).collect();
    let corr: Vec<f64> = match mode {
        CenteringMode::FiniteN => (0..k).map(|j| if j == 0 { Ok(1.0) } else { model.r_n(n, j) }).collect::<Result<_>>()?,
        CenteringMode::Limit => {
            let a = model
                .alpha()
                .ok_or_else(|| Error::Condition("limit centering needs a known alpha".into()))?;
            if !(a > 0.0 && a < 2.0) {
                return Err(Error::domain(format!("alpha={a} is outside (0, 2)")));
            }
            (0..k).map(|j| rho(a, j)).collect()
        }
    };
    let cov = GaussianBlockCov::from_positions(&idx, |d| corr[d])?;
    mixed_abs_moment(pv, &cov)
}

/// Realised variation ratio on `t_grid`; `model` fills the `ψ` centers.
pub fn rvr(series: &[f64], n: usize, model: Option<&CovarianceModel>, t_grid: Option<&[f64]>) -> Result<RvrResult> {
    let p11 = PowerVector::new(vec![1.0, 1.0])?;
    let p20 = PowerVector::new(vec![2.0, 0.0])?;
    let abs_inc = increments(series, 2)?;
    let grid = match t_grid {
        Some(g) => g.to_vec(),
        None => default_t_grid(n, abs_inc.len()).into_iter().filter(|t| t * n as f64 >= 2.0 - 1e-9).collect(),
    };
    let (grid, raw_11) = raw_on_grid(series, n, &p11, Some(&grid))?;
    let (_, raw_20) = raw_on_grid(series, n, &p20, Some(&grid))?;
    let rvr_t = grid
        .iter()
        .zip(raw_11.iter().zip(&raw_20))
        .map(|(t, (a, b))| {
            if *b > 0.0 {
                Ok(std::f64::consts::FRAC_PI_2 * a / b)
            } else {
                Err(Error::Data(format!("V(X;2,0) vanishes at t={t}; RVR undefined")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let (psi_finite, psi_limit) = match model {
        Some(m) => {
            let finite = psi(m.r_n(n, 1)?);
            let limit = m.alpha().filter(|a| *a > 0.0 && *a < 2.0).map(|a| psi(rho(a, 1)));
            (Some(finite), limit)
        }
        None => (None, None),
    };
    Ok(RvrResult { n, t_grid: grid, rvr_t, psi_finite, psi_limit, raw_11, raw_20 })
}
