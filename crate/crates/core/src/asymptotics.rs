//! Asymptotic covariance of multipower statistics and CLT studentization.
//!
//! For families `a`, `b` with window products `P^a_i = ∏_j |Q_{i+j}|^{a_j}` over a
//! unit-variance stationary Gaussian sequence `Q` with correlations `ρ(l)`,
//!
//! `β_ab = Σ_{l∈ℤ} Cov(P^a_0, P^b_l) = c_ab(0) + Σ_{l≥1} (c_ab(l) + c_ba(l))`.
//!
//! Lag terms decay like `l^{2α−4}`, so the series converges for `α < 3/2`.
//! Three evaluation routes are used:
//!
//! * single powers `(p)`, `(q)`: `E|X|^p|Y|^q = μ_p μ_q ₂F₁(−p/2, −q/2; 1/2; ρ²)`,
//!   summed to `L` lags (for `p = q = 2` this is `2 + 4Σρ²`);
//! * `(1,1)` against `(2)`: the three-variable closed form `h`;
//! * anything else: exact lag moments by quadrature while the windows are close,
//!   then the second-order expansion in the cross-window correlations `C`,
//!   `c_ab(l) ≈ ½ tr(H_a C H_b Cᵀ)` with `H = E[∇²∏|X_j|^{p_j}]` (Price's theorem;
//!   first and third orders vanish by evenness, so the error is `O(ρ⁴)`).
//!
//! Every series is summed to `L` lags and closed with the tail `Σ_{l>L} c·l^{2α−4}`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmom::{mixed_abs_moment, multipower_cov_with, mu_p, nabeya_h, psi, GaussianBlockCov, MomentMethod, PowerVector};
use crate::kernels::rho;
use crate::stats::{ks_normal, summarize, KsResult, Summary};

pub const DEFAULT_LAG: usize = 10_000;
/// Lag limit for the pure-quadrature cross-check route.
pub const DEFAULT_QUAD_LAG: usize = 512;
/// Exact lags past window overlap before switching to the expansion.
pub const DEFAULT_EXACT_LAGS: usize = 6;
const TAIL_WARN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaMethod {
    ClosedForm,
    SeriesQuadrature,
    SeriesMc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaOptions {
    /// Lags summed explicitly.
    pub lag: usize,
    /// Lags evaluated by exact quadrature beyond the window overlap.
    pub exact_lags: usize,
}

impl Default for BetaOptions {
    fn default() -> Self {
        Self { lag: DEFAULT_LAG, exact_lags: DEFAULT_EXACT_LAGS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaEntry {
    pub value: f64,
    /// Estimated error from truncation, tail extrapolation and moment accuracy.
    pub tail_bound: f64,
    /// Last lag evaluated explicitly.
    pub lags: usize,
    pub method: BetaMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaMatrix {
    pub dim: usize,
    pub alpha: f64,
    pub families: Vec<PowerVector>,
    /// Row-major entries.
    pub entries: Vec<BetaEntry>,
    /// Largest lag used by any entry.
    pub truncation_lag: usize,
    /// Largest per-entry error bound.
    pub tail_bound: f64,
    pub warnings: Vec<String>,
}

impl BetaMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j].value
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// `wᵀβw`.
    pub fn quadratic_form(&self, w: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += w[i] * self.get(i, j) * w[j];
            }
        }
        s
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.5) {
        return Err(Error::Condition(format!(
            "beta series only converges for alpha in (0, 3/2); got alpha={alpha}"
        )));
    }
    Ok(())
}

/// Powers with leading and trailing zeros removed (stationarity makes the shift irrelevant).
fn trimmed(pv: &PowerVector) -> Vec<f64> {
    let p = &pv.powers;
    let first = p.iter().position(|v| *v != 0.0);
    let last = p.iter().rposition(|v| *v != 0.0);
    match (first, last) {
        (Some(a), Some(b)) => p[a..=b].to_vec(),
        _ => Vec::new(),
    }
}

/// Gauss hypergeometric `₂F₁(a, b; 1/2; z)` for `|z| < 1` by its power series.
fn hyp2f1_half(a: f64, b: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..10_000 {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((0.5 + kf) * (kf + 1.0)) * z;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `Cov(|X|^p, |Y|^q)` for standard normals with correlation `r`.
pub fn pair_abs_cov(p: f64, q: f64, r: f64) -> f64 {
    mu_p(p) * mu_p(q) * (hyp2f1_half(-p / 2.0, -q / 2.0, r * r) - 1.0)
}

/// Tail `Σ_{l>L} c·l^{2α−4}` given the last term `t_L = c·L^{2α−4}`, by the midpoint integral rule.
fn power_tail(t_last: f64, last: usize, alpha: f64) -> f64 {
    let e = 2.0 * alpha - 4.0;
    let c = t_last / (last as f64).powf(e);
    c * (last as f64 + 0.5).powf(e + 1.0) / (3.0 - 2.0 * alpha)
}

fn finish(sum: f64, tail: f64, extra_err: f64, lags: usize, method: BetaMethod) -> BetaEntry {
    BetaEntry { value: sum + tail, tail_bound: tail.abs() + extra_err, lags, method }
}

/// `β` for two single powers, by the hypergeometric pair series.
pub fn beta_single_series(p: f64, q: f64, alpha: f64, lag: usize) -> Result<BetaEntry> {
    check_alpha(alpha)?;
    let lag = lag.max(1);
    let mut sum = mu_p(p + q) - mu_p(p) * mu_p(q);
    let terms: Vec<f64> = (1..=lag).into_par_iter().map(|l| 2.0 * pair_abs_cov(p, q, rho(alpha, l))).collect();
    sum += terms.iter().sum::<f64>();
    Ok(finish(sum, power_tail(terms[lag - 1], lag, alpha), 0.0, lag, BetaMethod::ClosedForm))
}

/// `β₂₂ = 2 + 4Σ_{k≥1} ρ(k)²`.
pub fn beta22_series(alpha: f64, lag: usize) -> Result<BetaEntry> {
    check_alpha(alpha)?;
    let lag = lag.max(1);
    let terms: Vec<f64> = (1..=lag).map(|k| 4.0 * rho(alpha, k).powi(2)).collect();
    let sum = 2.0 + terms.iter().sum::<f64>();
    Ok(finish(sum, power_tail(terms[lag - 1], lag, alpha), 0.0, lag, BetaMethod::ClosedForm))
}

/// `β₁₂` for families `(1,1)` and `(2,0)`:
/// `2(h(1,ρ(1),ρ(1)) − c) + 2Σ_{k≥1}(h(ρ(k),ρ(k+1),ρ(1)) − c)` with `c = (2/π)ψ(ρ(1))`.
pub fn beta12_h_series(alpha: f64, lag: usize) -> Result<BetaEntry> {
    check_alpha(alpha)?;
    let lag = lag.max(1);
    let r1 = rho(alpha, 1);
    let c = 2.0 / std::f64::consts::PI * psi(r1);
    let mut sum = 2.0 * (nabeya_h(1.0, r1, r1)? - c);
    let terms = (1..=lag)
        .into_par_iter()
        .map(|k| Ok(2.0 * (nabeya_h(rho(alpha, k), rho(alpha, k + 1), r1)? - c)))
        .collect::<Result<Vec<f64>>>()?;
    sum += terms.iter().sum::<f64>();
    Ok(finish(sum, power_tail(terms[lag - 1], lag, alpha), 0.0, lag, BetaMethod::ClosedForm))
}

/// One lag term `c_ab(l) + c_ba(l)` (or `c_ab(0)` at `l = 0`) with its error and method.
fn lag_term(a: &PowerVector, b: &PowerVector, alpha: f64, l: usize) -> Result<(f64, f64, MomentMethod)> {
    let corr = |j: usize| if j == 0 { 1.0 } else { rho(alpha, j) };
    let ab = multipower_cov_with(a, b, corr, l)?;
    if l == 0 {
        return Ok((ab.value, ab.error, ab.method));
    }
    let ba = multipower_cov_with(b, a, corr, l)?;
    let method = if ab.method == MomentMethod::QuasiMonteCarlo || ba.method == MomentMethod::QuasiMonteCarlo {
        MomentMethod::QuasiMonteCarlo
    } else {
        MomentMethod::Quadrature
    };
    Ok((ab.value + ba.value, ab.error + ba.error, method))
}

/// `β_ab` by quadrature of lag moments up to `quad_lag`, then a fitted power-law tail.
///
/// Evaluation stops early once terms sink below ten times their own error; the tail
/// constant is the mean of `t(l)·l^{4−2α}` over the last reliable disjoint-window lags.
pub fn beta_quadrature_series(a: &PowerVector, b: &PowerVector, alpha: f64, quad_lag: usize) -> Result<BetaEntry> {
    check_alpha(alpha)?;
    let disjoint = a.k().max(b.k());
    let (t0, e0, m0) = lag_term(a, b, alpha, 0)?;
    let mut sum = t0;
    let mut err = e0;
    let mut qmc = m0 == MomentMethod::QuasiMonteCarlo;
    let mut reliable: Vec<(usize, f64)> = Vec::new();
    let mut last = 0usize;
    let mut block = 16usize;
    let mut noisy_run = 0usize;
    'outer: while last < quad_lag {
        let hi = (last + block).min(quad_lag);
        let terms = (last + 1..=hi)
            .into_par_iter()
            .map(|l| lag_term(a, b, alpha, l))
            .collect::<Result<Vec<_>>>()?;
        for (off, (t, e, m)) in terms.into_iter().enumerate() {
            let l = last + 1 + off;
            sum += t;
            err += e;
            qmc |= m == MomentMethod::QuasiMonteCarlo;
            if t.abs() > 10.0 * e {
                noisy_run = 0;
                if l > disjoint {
                    reliable.push((l, t));
                }
            } else {
                noisy_run += 1;
                if noisy_run >= 4 && l > disjoint {
                    last = l;
                    break 'outer;
                }
            }
        }
        last = hi;
        block *= 2;
    }
    let tail = if (alpha - 1.0).abs() < 1e-15 || reliable.is_empty() {
        0.0
    } else {
        let fit = &reliable[reliable.len().saturating_sub(16)..];
        let e = 2.0 * alpha - 4.0;
        let c = fit.iter().map(|(l, t)| t / (*l as f64).powf(e)).sum::<f64>() / fit.len() as f64;
        c * (last as f64 + 0.5).powf(e + 1.0) / (3.0 - 2.0 * alpha)
    };
    let method = if qmc { BetaMethod::SeriesMc } else { BetaMethod::SeriesQuadrature };
    Ok(finish(sum, tail, err, last, method))
}

/// `H_ij = E[∂_i∂_j ∏|X_l|^{p_l}]` for the window `pv` with correlations `ρ(|i−j|)`.
///
/// Off-diagonal entries are `∂M/∂r_ij` by central differences of the moment `M`;
/// diagonal entries follow from the scaling identity `p_i M = H_ii + Σ_{j≠i} r_ij H_ij`.
fn window_hessian(pv: &PowerVector, alpha: f64) -> Result<DMatrix<f64>> {
    let k = pv.k();
    let r = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { rho(alpha, i.abs_diff(j)) });
    let moment = |m: DMatrix<f64>| -> Result<f64> { mixed_abs_moment(pv, &GaussianBlockCov::new(m)?) };
    let base = moment(r.clone())?;
    let eps = 1e-4;
    let mut h = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i + 1..k {
            let bump = |sign: f64| {
                let mut m = r.clone();
                m[(i, j)] += sign * eps;
                m[(j, i)] += sign * eps;
                m
            };
            let d = (moment(bump(1.0))? - moment(bump(-1.0))?) / (2.0 * eps);
            h[(i, j)] = d;
            h[(j, i)] = d;
        }
    }
    for i in 0..k {
        let off: f64 = (0..k).filter(|&j| j != i).map(|j| r[(i, j)] * h[(i, j)]).sum();
        h[(i, i)] = pv.powers[i] * base - off;
    }
    Ok(h)
}

/// Second-order approximation of `c_ab(l)` for disjoint windows.
fn expansion_term(ha: &DMatrix<f64>, hb: &DMatrix<f64>, alpha: f64, l: usize) -> f64 {
    let c = DMatrix::from_fn(ha.nrows(), hb.nrows(), |i, j| rho(alpha, l + j - i));
    0.5 * (ha * &c * hb * c.transpose()).trace()
}

/// `β_ab` from exact lag terms near the diagonal, the correlation expansion further
/// out, and a power-law tail beyond `opts.lag`.
pub fn beta_expansion_series(a: &PowerVector, b: &PowerVector, alpha: f64, opts: &BetaOptions) -> Result<BetaEntry> {
    check_alpha(alpha)?;
    let switch = a.k().max(b.k()) + opts.exact_lags.max(1);
    let lag = opts.lag.max(switch + 1);
    let exact = (0..=switch)
        .into_par_iter()
        .map(|l| lag_term(a, b, alpha, l))
        .collect::<Result<Vec<_>>>()?;
    let mut sum: f64 = exact.iter().map(|t| t.0).sum();
    let mut err: f64 = exact.iter().map(|t| t.1).sum();
    let qmc = exact.iter().any(|t| t.2 == MomentMethod::QuasiMonteCarlo);
    let (ha, hb) = (window_hessian(a, alpha)?, window_hessian(b, alpha)?);
    let approx = |l: usize| expansion_term(&ha, &hb, alpha, l) + expansion_term(&hb, &ha, alpha, l);
    // the expansion error decays like ρ(l)⁴ ∝ l^{4α−8}; scale the mismatch at the switch lag
    let gap = (exact[switch].0 - approx(switch)).abs();
    err += gap * switch as f64 / (7.0 - 4.0 * alpha);
    let terms: Vec<f64> = (switch + 1..=lag).into_par_iter().map(approx).collect();
    sum += terms.iter().sum::<f64>();
    let method = if qmc { BetaMethod::SeriesMc } else { BetaMethod::SeriesQuadrature };
    Ok(finish(sum, power_tail(*terms.last().expect("non-empty"), lag, alpha), err, lag, method))
}

/// One entry of `β`, choosing the most accurate available route.
pub fn beta_entry(a: &PowerVector, b: &PowerVector, alpha: f64, opts: &BetaOptions) -> Result<BetaEntry> {
    check_alpha(alpha)?;
    let (ta, tb) = (trimmed(a), trimmed(b));
    if ta.is_empty() || tb.is_empty() {
        return Ok(BetaEntry { value: 0.0, tail_bound: 0.0, lags: 0, method: BetaMethod::ClosedForm });
    }
    if (alpha - 1.0).abs() < 1e-15 {
        // ρ(l) = 0 for l ≥ 1: only overlapping windows contribute
        let lags = ta.len().max(tb.len());
        let (pa, pb) = (PowerVector::new(ta)?, PowerVector::new(tb)?);
        return beta_quadrature_series(&pa, &pb, alpha, lags).map(|mut e| {
            if e.tail_bound < 1e-12 {
                e.method = BetaMethod::ClosedForm;
            }
            e
        });
    }
    match (ta.as_slice(), tb.as_slice()) {
        ([p], [q]) if *p == 2.0 && *q == 2.0 => beta22_series(alpha, opts.lag),
        ([p], [q]) => beta_single_series(*p, *q, alpha, opts.lag),
        ([x, y], [z]) | ([z], [x, y]) if *x == 1.0 && *y == 1.0 && *z == 2.0 => beta12_h_series(alpha, opts.lag),
        _ => beta_expansion_series(&PowerVector::new(ta)?, &PowerVector::new(tb)?, alpha, opts),
    }
}

/// The `d×d` matrix `β` for `families` at index `alpha`.
pub fn beta_matrix(families: &[PowerVector], alpha: f64, opts: &BetaOptions) -> Result<BetaMatrix> {
    check_alpha(alpha)?;
    let d = families.len();
    if d == 0 {
        return Err(Error::validation("beta matrix needs at least one power family"));
    }
    let mut entries = vec![None; d * d];
    for i in 0..d {
        for j in i..d {
            let e = beta_entry(&families[i], &families[j], alpha, opts)?;
            entries[i * d + j] = Some(e);
            entries[j * d + i] = Some(e);
        }
    }
    let entries: Vec<BetaEntry> = entries.into_iter().map(|e| e.expect("filled")).collect();
    let tail_bound = entries.iter().map(|e| e.tail_bound).fold(0.0, f64::max);
    let truncation_lag = entries.iter().map(|e| e.lags).max().unwrap_or(0);
    let mut warnings = Vec::new();
    if tail_bound > TAIL_WARN {
        warnings.push(format!("truncation error estimate {tail_bound:.2e} exceeds {TAIL_WARN:e}"));
    }
    Ok(BetaMatrix { dim: d, alpha, families: families.to_vec(), entries, truncation_lag, tail_bound, warnings })
}

/// `A = ∏μ_{2p_l} − (2k−1)∏μ_{p_l}² + 2Σ_{m=1}^{k−1} ∏_{l≤m}μ_{p_l} ∏_{l>k−m}μ_{p_l} ∏_{l≤k−m}μ_{p_l+p_{l+m}}`,
/// the asymptotic variance of a semimartingale multipower statistic.
pub fn bsm_constant_a(pv: &PowerVector) -> f64 {
    let p = &pv.powers;
    let k = p.len();
    let prod = |it: &mut dyn Iterator<Item = f64>| it.product::<f64>();
    let mut a = prod(&mut p.iter().map(|x| mu_p(2.0 * x))) - (2 * k - 1) as f64 * prod(&mut p.iter().map(|x| mu_p(*x).powi(2)));
    for m in 1..k {
        let head = prod(&mut p[..m].iter().map(|x| mu_p(*x)));
        let tail = prod(&mut p[k - m..].iter().map(|x| mu_p(*x)));
        let mixed = prod(&mut (0..k - m).map(|l| mu_p(p[l] + p[l + m])));
        a += 2.0 * head * tail * mixed;
    }
    a
}

/// `A_s = β_ij |σ_s|^{p₊^i + p₊^j}` on a grid and its running trapezoid integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceProcess {
    pub dim: usize,
    pub times: Vec<f64>,
    /// Row-major `A_s` per grid point.
    pub pointwise: Vec<Vec<f64>>,
    /// Row-major `∫_0^t A_s ds` per grid point.
    pub integrated: Vec<Vec<f64>>,
}

impl VarianceProcess {
    pub fn terminal(&self, i: usize, j: usize) -> f64 {
        self.integrated.last().map(|m| m[i * self.dim + j]).unwrap_or(0.0)
    }
}

pub fn clt_variance_process(beta: &BetaMatrix, sigma: &[f64], n: usize) -> Result<VarianceProcess> {
    let d = beta.dim;
    if sigma.is_empty() || n == 0 {
        return Err(Error::validation("variance process needs a non-empty sigma path and n ≥ 1"));
    }
    let pp: Vec<f64> = beta.families.iter().map(|f| f.p_plus).collect();
    let at = |s: f64| -> Vec<f64> {
        (0..d * d).map(|ij| beta.get(ij / d, ij % d) * s.abs().powf(pp[ij / d] + pp[ij % d])).collect()
    };
    let pointwise: Vec<Vec<f64>> = sigma.iter().map(|s| at(*s)).collect();
    let h = 1.0 / n as f64;
    let mut integrated = vec![vec![0.0; d * d]];
    for w in pointwise.windows(2) {
        let prev = integrated.last().expect("non-empty");
        let next = (0..d * d).map(|ij| prev[ij] + 0.5 * h * (w[0][ij] + w[1][ij])).collect();
        integrated.push(next);
    }
    let times = (0..sigma.len()).map(|i| i as f64 * h).collect();
    Ok(VarianceProcess { dim: d, times, pointwise, integrated })
}

/// Weight `w = (π/2, −ψ(ρ(1)))` of the RVR delta method for families `{(1,1), (2,0)}`.
pub fn rvr_weight(alpha: f64) -> [f64; 2] {
    [std::f64::consts::FRAC_PI_2, -psi(rho(alpha, 1))]
}

/// Per-replicate ingredients of a studentized RVR statistic at a fixed time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RvrObservation {
    pub n: usize,
    pub rvr: f64,
    /// Centering, normally `ψ(r_n(1))`.
    pub center: f64,
    /// Estimate of `∫_0^t σ²` (the realised variance `V(X;2)_t`).
    pub int_sigma2: f64,
    /// Estimate of `∫_0^t σ⁴` (`V(X;4)_t / 3`).
    pub int_sigma4: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub statistic: String,
    /// `wᵀβw`, the limit variance for unit integrated-volatility ratio.
    pub limit_variance: f64,
    pub samples: Vec<f64>,
    pub summary: Summary,
    pub ks: KsResult,
}

/// `√n(RVR − center) / sqrt(wᵀβw ∫σ⁴ / (∫σ²)²)` for each observation.
pub fn studentize_rvr(obs: &[RvrObservation], beta: &BetaMatrix) -> Result<CltReport> {
    let alpha = beta.alpha;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Condition(format!("the RVR central limit theorem needs alpha in (0, 1); got {alpha}")));
    }
    if beta.dim != 2 || trimmed(&beta.families[0]) != [1.0, 1.0] || trimmed(&beta.families[1]) != [2.0] {
        return Err(Error::validation("RVR studentization needs beta for families {(1,1), (2,0)}"));
    }
    if obs.is_empty() {
        return Err(Error::validation("no observations to studentize"));
    }
    let w = rvr_weight(alpha);
    let q = beta.quadratic_form(&w);
    let samples = obs
        .iter()
        .map(|o| {
            if !(o.int_sigma2 > 0.0 && o.int_sigma4 > 0.0) {
                return Err(Error::Data("integrated volatility estimates must be positive".into()));
            }
            let var = q * o.int_sigma4 / (o.int_sigma2 * o.int_sigma2);
            Ok((o.n as f64).sqrt() * (o.rvr - o.center) / var.sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::Data("non-finite studentized statistic".into()));
    }
    Ok(CltReport {
        statistic: "sqrt(n)(RVR - psi(r_n(1))) / sqrt(w'Bw int sigma^4 / (int sigma^2)^2)".into(),
        limit_variance: q,
        summary: summarize(&samples),
        ks: ks_normal(&samples),
        samples,
    })
}

/// Studentizes already-centered scaled statistics by a known variance and tests normality.
pub fn normality_report(statistic: &str, scaled: &[f64], variance: f64) -> Result<CltReport> {
    if !(variance > 0.0) {
        return Err(Error::validation("variance must be positive"));
    }
    let samples: Vec<f64> = scaled.iter().map(|x| x / variance.sqrt()).collect();
    Ok(CltReport {
        statistic: statistic.into(),
        limit_variance: variance,
        summary: summarize(&samples),
        ks: ks_normal(&samples),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pv(s: &str) -> PowerVector {
        s.parse().unwrap()
    }

    fn rho_direct(a: f64, k: usize) -> f64 {
        let k = k as f64;
        0.5 * ((k + 1.0).powf(a) - 2.0 * k.powf(a) + (k - 1.0).abs().powf(a))
    }

    #[test]
    fn white_noise_beta22_is_two() {
        let b = beta_matrix(&[pv("2")], 1.0, &BetaOptions::default()).unwrap();
        assert_eq!(b.get(0, 0), 2.0);
        assert_eq!(b.entries[0].tail_bound, 0.0);
    }

    #[test]
    fn k1_identity_with_semimartingale_constant() {
        for p in [0.5, 1.0, 1.5, 2.0, 3.0] {
            let v = PowerVector::new(vec![p]).unwrap();
            let b = beta_entry(&v, &v, 1.0, &BetaOptions::default()).unwrap();
            assert!((b.value - bsm_constant_a(&v)).abs() < 1e-9, "p={p}: {} vs {}", b.value, bsm_constant_a(&v));
        }
    }

    #[test]
    fn semimartingale_constants() {
        assert_eq!(bsm_constant_a(&pv("2")), 2.0);
        let expect = 1.0 - 3.0 * (2.0 / PI).powi(2) + 2.0 * (2.0 / PI);
        assert!((bsm_constant_a(&pv("1,1")) - expect).abs() < 1e-14);
        assert!((expect - 1.05740).abs() < 1e-4);
        assert_eq!(bsm_constant_a(&pv("0")), 0.0);
    }

    #[test]
    fn beta22_matches_direct_sum() {
        for alpha in [0.4, 1.4] {
            let e = beta22_series(alpha, 10_000).unwrap();
            let direct: f64 = 2.0 + 4.0 * (1..=200_000).map(|k| rho_direct(alpha, k).powi(2)).sum::<f64>();
            assert!((e.value - direct).abs() < e.tail_bound.max(1e-9), "{alpha}: {} vs {direct}", e.value);
        }
    }

    #[test]
    fn tail_bound_covers_doubling() {
        for alpha in [0.4, 1.2, 1.45] {
            let a = beta22_series(alpha, 2000).unwrap();
            let b = beta22_series(alpha, 4000).unwrap();
            assert!((a.value - b.value).abs() < a.tail_bound, "{alpha}");
        }
    }

    #[test]
    fn hypergeometric_pair_matches_closed_forms() {
        for r in [-0.6, 0.0, 0.3, 0.9] {
            assert!((pair_abs_cov(2.0, 2.0, r) - 2.0 * r * r).abs() < 1e-13);
            let bip = 2.0 / PI * ((1.0 - r * r).sqrt() + r * f64::asin(r)) - 2.0 / PI;
            assert!((pair_abs_cov(1.0, 1.0, r) - bip).abs() < 1e-12);
        }
    }

    #[test]
    fn beta12_h_series_matches_quadrature_route() {
        let alpha = 0.4;
        let h = beta12_h_series(alpha, 10_000).unwrap();
        let q = beta_quadrature_series(&pv("1,1"), &pv("2,0"), alpha, 512).unwrap();
        assert!((h.value - q.value).abs() < h.tail_bound + q.tail_bound + 1e-6, "{h:?} vs {q:?}");
    }

    #[test]
    fn single_power_route_matches_quadrature() {
        let alpha = 0.6;
        let s = beta_single_series(1.0, 2.0, alpha, 10_000).unwrap();
        let q = beta_quadrature_series(&pv("1"), &pv("2"), alpha, 512).unwrap();
        assert!((s.value - q.value).abs() < s.tail_bound + q.tail_bound + 1e-6, "{s:?} vs {q:?}");
    }

    #[test]
    fn expansion_route_matches_closed_forms() {
        for alpha in [0.4, 1.3] {
            let opts = BetaOptions::default();
            let e = beta_expansion_series(&pv("2"), &pv("2"), alpha, &opts).unwrap();
            let c = beta22_series(alpha, opts.lag).unwrap();
            assert!((e.value - c.value).abs() < 1e-8 + e.tail_bound, "{alpha}: {e:?} vs {c:?}");
            let e = beta_expansion_series(&pv("1,1"), &pv("2"), alpha, &opts).unwrap();
            let c = beta12_h_series(alpha, opts.lag).unwrap();
            assert!((e.value - c.value).abs() < e.tail_bound + c.tail_bound + 1e-8, "{alpha}: {e:?} vs {c:?}");
        }
    }

    #[test]
    fn bipower_beta_exact_lags_converge() {
        let a = pv("1,1");
        let short = beta_expansion_series(&a, &a, 0.4, &BetaOptions { exact_lags: 3, ..Default::default() }).unwrap();
        let long = beta_expansion_series(&a, &a, 0.4, &BetaOptions { exact_lags: 12, ..Default::default() }).unwrap();
        assert!((short.value - long.value).abs() < short.tail_bound, "{short:?} vs {long:?}");
    }

    #[test]
    fn refuses_outside_summability() {
        for alpha in [1.5, 1.7, 0.0] {
            assert!(matches!(beta_matrix(&[pv("2")], alpha, &BetaOptions::default()), Err(Error::Condition(_))));
        }
    }

    #[test]
    fn joint_matrix_is_symmetric_psd() {
        let b = beta_matrix(&[pv("1,1"), pv("2,0")], 0.4, &BetaOptions::default()).unwrap();
        assert_eq!(b.get(0, 1), b.get(1, 0));
        let m = b.matrix() + DMatrix::identity(2, 2) * b.tail_bound;
        assert!(m.cholesky().is_some());
    }

    #[test]
    fn variance_process_examples() {
        let b = beta_matrix(&[pv("2")], 1.0, &BetaOptions::default()).unwrap();
        let n = 1000;
        let c = vec![1.5; n + 1];
        let v = clt_variance_process(&b, &c, n).unwrap();
        assert!((v.terminal(0, 0) - 2.0 * 1.5f64.powi(4)).abs() < 1e-10);
        let lin: Vec<f64> = (0..=n).map(|i| 1.0 + i as f64 / n as f64).collect();
        let v = clt_variance_process(&b, &lin, n).unwrap();
        assert!((v.terminal(0, 0) - 12.4).abs() < 1e-4);
    }

    #[test]
    fn rvr_weight_at_white_noise() {
        assert_eq!(rvr_weight(1.0), [PI / 2.0, -1.0]);
    }

    #[test]
    fn studentize_requires_rough_alpha() {
        let b = beta_matrix(&[pv("1,1"), pv("2,0")], 1.2, &BetaOptions::default()).unwrap();
        let o = RvrObservation { n: 100, rvr: 1.0, center: 1.0, int_sigma2: 1.0, int_sigma4: 1.0 };
        assert!(matches!(studentize_rvr(&[o], &b), Err(Error::Condition(_))));
    }
}
