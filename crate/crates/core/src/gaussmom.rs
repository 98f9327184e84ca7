//! Absolute moments of correlated Gaussian vectors.
//!
//! Closed forms cover `μ_p`, `E|UV|` and `E|X₁²X₂X₃|`. General mixed moments
//! `E ∏|X_j|^{p_j}` are computed by nested Gauss–Legendre quadrature in the
//! Cholesky coordinates `X = LZ`: each axis is split at the kink of its
//! `|·|^p` factor and the last axis is integrated analytically. Beyond four
//! dimensions a randomized Halton rule takes over.

use std::f64::consts::{FRAC_2_PI, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quad::GaussLegendre;
use crate::numerics::special::{gamma, noncentral_abs_moment, norm_inv, norm_pdf};

/// `E|U|^p` for `U ~ N(0, 1)`.
pub fn mu_p(p: f64) -> f64 {
    if p == 0.0 {
        return 1.0;
    }
    if p == 2.0 {
        return 1.0;
    }
    if p == 4.0 {
        return 3.0;
    }
    2f64.powf(0.5 * p) * gamma(0.5 * (p + 1.0)) / PI.sqrt()
}

/// `ψ(ρ) = √(1−ρ²) + ρ arcsin ρ = (π/2) E|UV|`; NaN outside `[−1, 1]`.
pub fn psi(rho: f64) -> f64 {
    if !(-1.0..=1.0).contains(&rho) {
        return f64::NAN;
    }
    (1.0 - rho * rho).sqrt() + rho * rho.asin()
}

/// `E|X₁² X₂ X₃|` for standard normals with correlations `ρ₁₂, ρ₁₃, ρ₂₃`.
pub fn nabeya_h(rho12: f64, rho13: f64, rho23: f64) -> Result<f64> {
    let m = DMatrix::from_row_slice(3, 3, &[1.0, rho12, rho13, rho12, 1.0, rho23, rho13, rho23, 1.0]);
    GaussianBlockCov::new(m)?;
    Ok(nabeya_unchecked(rho12, rho13, rho23))
}

fn nabeya_unchecked(r12: f64, r13: f64, r23: f64) -> f64 {
    let r23 = r23.clamp(-1.0, 1.0);
    FRAC_2_PI * ((1.0 - r23 * r23).sqrt() * (1.0 + r12 * r12 + r13 * r13) + (r23 + 2.0 * r12 * r13) * r23.asin())
}

/// Powers `(p₁, …, p_k)` of a multipower statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerVector {
    pub powers: Vec<f64>,
    pub p_plus: f64,
    /// Smallest strictly positive power (0 when every power is zero).
    pub p_min: f64,
}

impl PowerVector {
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        if powers.is_empty() {
            return Err(Error::validation("power vector must have at least one entry"));
        }
        if powers.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::validation(format!("powers must be finite and non-negative: {powers:?}")));
        }
        let p_plus = powers.iter().sum();
        let p_min = powers.iter().copied().filter(|p| *p > 0.0).fold(f64::INFINITY, f64::min);
        Ok(Self { p_plus, p_min: if p_min.is_finite() { p_min } else { 0.0 }, powers })
    }

    pub fn k(&self) -> usize {
        self.powers.len()
    }

    /// Label such as `2,0` or `1,1`.
    pub fn label(&self) -> String {
        self.powers.iter().map(|p| format!("{p}")).collect::<Vec<_>>().join(",")
    }
}

impl std::str::FromStr for PowerVector {
    type Err = Error;

    /// Parses a comma-separated list such as `1,1`.
    fn from_str(s: &str) -> Result<Self> {
        let powers = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::validation(format!("cannot parse power '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(powers)
    }
}

const PSD_TOL: f64 = 1e-10;
const DEGENERATE_TOL: f64 = 1e-12;

/// Correlation matrix of a Gaussian block.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBlockCov {
    pub dim: usize,
    pub entries: DMatrix<f64>,
    /// Strictly positive definite.
    pub non_degenerate: bool,
}

impl GaussianBlockCov {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || entries.ncols() != dim {
            return Err(Error::validation("correlation matrix must be square and non-empty"));
        }
        for i in 0..dim {
            if (entries[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::validation("correlation matrix needs a unit diagonal"));
            }
            for j in 0..i {
                if (entries[(i, j)] - entries[(j, i)]).abs() > 1e-12 || !entries[(i, j)].is_finite() {
                    return Err(Error::validation("correlation matrix must be symmetric and finite"));
                }
            }
        }
        let min_eig = SymmetricEigen::new(entries.clone()).eigenvalues.min();
        if min_eig < -PSD_TOL {
            return Err(Error::validation(format!(
                "correlation matrix is not positive semidefinite (smallest eigenvalue {min_eig:.3e})"
            )));
        }
        Ok(Self { dim, non_degenerate: min_eig > DEGENERATE_TOL, entries })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, entries: DMatrix::identity(dim, dim), non_degenerate: true }
    }

    /// Toeplitz block with `corr(|i − j|)` at positions `idx`.
    pub fn from_positions(idx: &[usize], corr: impl Fn(usize) -> f64) -> Result<Self> {
        let k = idx.len();
        let m = DMatrix::from_fn(k, k, |a, b| if a == b { 1.0 } else { corr(idx[a].abs_diff(idx[b])) });
        Self::new(m)
    }

    /// Two-variable block with correlation `rho`.
    pub fn pair(rho: f64) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]))
    }

    fn submatrix(&self, keep: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(keep.len(), keep.len(), |a, b| self.entries[(keep[a], keep[b])])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    ClosedForm,
    Quadrature,
    QuasiMonteCarlo,
}

/// A moment with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub value: f64,
    pub error: f64,
    pub method: MomentMethod,
}

impl Moment {
    fn exact(value: f64) -> Self {
        Self { value, error: 0.0, method: MomentMethod::ClosedForm }
    }
}

/// `E ∏|X_j|^{p_j}`.
pub fn mixed_abs_moment(pv: &PowerVector, cov: &GaussianBlockCov) -> Result<f64> {
    mixed_abs_moment_with_error(pv, cov).map(|m| m.value)
}

const QUAD_MAX_DIM: usize = 4;
const QUAD_REL_TOL: f64 = 1e-9;
const QMC_POINTS: usize = 1 << 22;
const QMC_REPLICATES: usize = 16;
const QMC_SEED: u64 = 0x5_eed0_fa11;

pub fn mixed_abs_moment_with_error(pv: &PowerVector, cov: &GaussianBlockCov) -> Result<Moment> {
    if pv.k() != cov.dim {
        return Err(Error::validation(format!(
            "power vector has {} entries but the covariance block is {}-dimensional",
            pv.k(),
            cov.dim
        )));
    }
    let keep: Vec<usize> = (0..pv.k()).filter(|&i| pv.powers[i] > 0.0).collect();
    let powers: Vec<f64> = keep.iter().map(|&i| pv.powers[i]).collect();
    let sub = cov.submatrix(&keep);
    let r = |a: usize, b: usize| sub[(a, b)];
    match powers.as_slice() {
        [] => return Ok(Moment::exact(1.0)),
        [p] => return Ok(Moment::exact(mu_p(*p))),
        [a, b] if *a == 1.0 && *b == 1.0 => return Ok(Moment::exact(FRAC_2_PI * psi(r(0, 1).clamp(-1.0, 1.0)))),
        [a, b] if *a == 2.0 && *b == 2.0 => return Ok(Moment::exact(1.0 + 2.0 * r(0, 1).powi(2))),
        [_, _, _] => {
            if let Some(sq) = (0..3).find(|&i| powers[i] == 2.0) {
                let others: Vec<usize> = (0..3).filter(|&i| i != sq).collect();
                if others.iter().all(|&i| powers[i] == 1.0) {
                    let (o1, o2) = (others[0], others[1]);
                    return Ok(Moment::exact(nabeya_unchecked(r(sq, o1), r(sq, o2), r(o1, o2))));
                }
            }
        }
        _ => {}
    }
    let reduced = GaussianBlockCov { dim: keep.len(), non_degenerate: true, entries: sub };
    let reduced_pv = PowerVector::new(powers)?;
    if reduced.dim <= QUAD_MAX_DIM {
        let q = mixed_abs_moment_quadrature(&reduced_pv, &reduced)?;
        if q.error <= 1e-6 * q.value.abs() {
            return Ok(q);
        }
    }
    mixed_abs_moment_qmc(&reduced_pv, &reduced, QMC_POINTS, QMC_SEED)
}

/// Lower Cholesky factor; degenerate blocks are rejected.
fn cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = m.nrows();
    let mut l = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let s: f64 = (0..j).map(|c| l[(i, c)] * l[(j, c)]).sum();
            if i == j {
                let d = m[(i, i)] - s;
                if d <= DEGENERATE_TOL {
                    return Err(Error::DegenerateCovariance(format!(
                        "Gaussian block is singular (pivot {d:.3e} at index {i})"
                    )));
                }
                l[(i, i)] = d.sqrt();
            } else {
                l[(i, j)] = (m[(i, j)] - s) / l[(j, j)];
            }
        }
    }
    Ok(l)
}

const Z_CUT: f64 = 9.0;

struct Nested<'a> {
    l: &'a DMatrix<f64>,
    p: &'a [f64],
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Nested<'_> {
    fn eval(&self, level: usize, means: &mut [f64; QUAD_MAX_DIM]) -> f64 {
        let k = self.p.len();
        let s = self.l[(level, level)];
        if level == k - 1 {
            return noncentral_abs_moment(self.p[level], means[level], s);
        }
        let kink = -means[level] / s;
        let mut total = 0.0;
        let side = |z: f64, w: f64, means: &mut [f64; QUAD_MAX_DIM]| {
            let saved = *means;
            for j in level + 1..k {
                means[j] += self.l[(j, level)] * z;
            }
            let factor = (means[level] + s * z).abs().powf(self.p[level]);
            let v = w * norm_pdf(z) * factor * self.eval(level + 1, means);
            *means = saved;
            v
        };
        if kink <= -Z_CUT || kink >= Z_CUT {
            // no kink inside the window: plain rule on [−Z_CUT, Z_CUT]
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                for sign in [-1.0, 1.0] {
                    let z = sign * Z_CUT * x;
                    total += side(z, w * Z_CUT, means);
                }
            }
        } else {
            // z = kink ∓ span·u² on each side, u in (0, 1)
            for (span, sign) in [(kink + Z_CUT, -1.0), (Z_CUT - kink, 1.0)] {
                for (u, w) in self.nodes.iter().zip(&self.weights) {
                    let z = kink + sign * span * u * u;
                    total += side(z, w * 2.0 * span * u, means);
                }
            }
        }
        total
    }
}

/// Half-rule on `(0, 1)` from an `m`-point Gauss–Legendre rule.
fn unit_rule(m: usize) -> (Vec<f64>, Vec<f64>) {
    let gl = GaussLegendre::cached(m);
    let nodes = gl.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let weights = gl.weights.iter().map(|w| 0.5 * w).collect();
    (nodes, weights)
}

/// Nested quadrature with node doubling until successive values agree to `1e−9`.
pub fn mixed_abs_moment_quadrature(pv: &PowerVector, cov: &GaussianBlockCov) -> Result<Moment> {
    let k = pv.k();
    if k != cov.dim {
        return Err(Error::validation("dimension mismatch"));
    }
    if k > QUAD_MAX_DIM {
        return Err(Error::validation(format!("quadrature supports at most {QUAD_MAX_DIM} dimensions")));
    }
    if !cov.non_degenerate {
        return Err(Error::DegenerateCovariance("quadrature requested for a singular block".into()));
    }
    let l = cholesky(&cov.entries)?;
    let run = |m: usize| {
        let (nodes, weights) = unit_rule(m);
        let nested = Nested { l: &l, p: &pv.powers, nodes, weights };
        nested.eval(0, &mut [0.0; QUAD_MAX_DIM])
    };
    let mut m = 16;
    let mut prev = run(m);
    let max_m = if k <= 2 { 512 } else if k == 3 { 256 } else { 128 };
    loop {
        m *= 2;
        let cur = run(m);
        let diff = (cur - prev).abs();
        if diff <= QUAD_REL_TOL * cur.abs() || m >= max_m {
            return Ok(Moment { value: cur, error: diff.max(1e-15 * cur.abs()), method: MomentMethod::Quadrature });
        }
        prev = cur;
    }
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    r
}

/// Randomly shifted Halton estimate; the error is the standard error across shifts.
pub fn mixed_abs_moment_qmc(pv: &PowerVector, cov: &GaussianBlockCov, points: usize, seed: u64) -> Result<Moment> {
    let k = pv.k();
    if k != cov.dim {
        return Err(Error::validation("dimension mismatch"));
    }
    if k > PRIMES.len() {
        return Err(Error::validation(format!("at most {} dimensions supported", PRIMES.len())));
    }
    let eig = SymmetricEigen::new(cov.entries.clone());
    // symmetric square root with eigenvalues clipped at zero
    let root = {
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
        &eig.eigenvectors * d * eig.eigenvectors.transpose()
    };
    let per = (points / QMC_REPLICATES).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut estimates = Vec::with_capacity(QMC_REPLICATES);
    let mut z = vec![0.0; k];
    for _ in 0..QMC_REPLICATES {
        let shift: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let mut sum = 0.0;
        for i in 1..=per as u64 {
            for d in 0..k {
                let u = (radical_inverse(i, PRIMES[d]) + shift[d]).fract();
                z[d] = norm_inv(u.clamp(1e-300, 1.0 - 1e-16));
            }
            let mut prod = 1.0;
            for a in 0..k {
                if pv.powers[a] == 0.0 {
                    continue;
                }
                let x: f64 = (0..k).map(|b| root[(a, b)] * z[b]).sum();
                prod *= x.abs().powf(pv.powers[a]);
            }
            sum += prod;
        }
        estimates.push(sum / per as f64);
    }
    let r = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / r;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (r - 1.0);
    Ok(Moment { value: mean, error: (var / r).sqrt(), method: MomentMethod::QuasiMonteCarlo })
}

/// Covariance of `∏_j |Q_{i+j}|^{a_j}` and `∏_j |Q_{i+lag+j}|^{b_j}` for a
/// stationary unit-variance sequence with correlations `corr`.
pub fn multipower_cov_with(
    pv_a: &PowerVector,
    pv_b: &PowerVector,
    corr: impl Fn(usize) -> f64,
    lag: usize,
) -> Result<Moment> {
    let block = |pv: &PowerVector, offset: usize| -> (Vec<usize>, Vec<f64>) {
        let idx: Vec<usize> = (0..pv.k()).map(|j| j + offset).collect();
        (idx, pv.powers.clone())
    };
    let moment = |idx: &[usize], powers: &[f64]| -> Result<Moment> {
        let cov = GaussianBlockCov::from_positions(idx, &corr)?;
        mixed_abs_moment_with_error(&PowerVector::new(powers.to_vec())?, &cov)
    };
    let (ia, pa) = block(pv_a, 0);
    let (ib, pb) = block(pv_b, lag);
    // merge shared positions by adding their powers
    let mut merged: Vec<(usize, f64)> = Vec::new();
    for (i, p) in ia.iter().zip(&pa).chain(ib.iter().zip(&pb)) {
        if *p == 0.0 {
            continue;
        }
        match merged.iter_mut().find(|(j, _)| j == i) {
            Some(e) => e.1 += p,
            None => merged.push((*i, *p)),
        }
    }
    merged.sort_by_key(|e| e.0);
    let joint = if merged.is_empty() {
        Moment::exact(1.0)
    } else {
        let idx: Vec<usize> = merged.iter().map(|e| e.0).collect();
        let pw: Vec<f64> = merged.iter().map(|e| e.1).collect();
        moment(&idx, &pw)?
    };
    let ea = moment(&ia, &pa)?;
    let eb = moment(&ib, &pb)?;
    let value = joint.value - ea.value * eb.value;
    let error = joint.error + ea.error * eb.value.abs() + eb.error * ea.value.abs();
    let method = [joint.method, ea.method, eb.method]
        .into_iter()
        .max_by_key(|m| *m as u8)
        .unwrap_or(MomentMethod::ClosedForm);
    Ok(Moment { value, error, method })
}

/// [`multipower_cov_with`] for the limiting fractional-noise correlations.
pub fn multipower_cov(
    pv_a: &PowerVector,
    pv_b: &PowerVector,
    rho: &crate::kernels::LimitCorrelation,
    lag: usize,
) -> Result<f64> {
    multipower_cov_with(pv_a, pv_b, |j| rho.get(j), lag).map(|m| m.value)
}

/// Draws `E|UV|` by plain Monte Carlo; used as an independent check in tests and diagnostics.
pub fn mc_abs_product<R: Rng + ?Sized>(rho: f64, draws: usize, rng: &mut R) -> (f64, f64) {
    use rand_distr::StandardNormal;
    let c = (1.0 - rho * rho).sqrt();
    let mut s = 0.0;
    let mut s2 = 0.0;
    for _ in 0..draws {
        let u: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        let v = (u * (rho * u + c * e)).abs();
        s += v;
        s2 += v * v;
    }
    let n = draws as f64;
    let mean = s / n;
    (mean, ((s2 / n - mean * mean) / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mu_p_values() {
        assert_eq!(mu_p(0.0), 1.0);
        assert_eq!(mu_p(2.0), 1.0);
        assert_eq!(mu_p(4.0), 3.0);
        assert_relative_eq!(mu_p(1.0), (2.0 / PI).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(mu_p(3.0), 2.0 * (2.0 / PI).sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn psi_values() {
        assert_eq!(psi(0.0), 1.0);
        assert_relative_eq!(psi(1.0), PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(psi(-1.0), PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(psi(0.414214), 1.087082, epsilon = 1e-6);
        assert!(psi(1.2).is_nan());
        for i in -99..=99 {
            let r = i as f64 / 100.0;
            assert!(psi(r) >= 1.0);
            if i != 0 {
                assert!(psi(r) > 1.0);
            }
        }
    }

    #[test]
    fn nabeya_identities() {
        assert_relative_eq!(nabeya_h(0.0, 0.0, 0.0).unwrap(), FRAC_2_PI, epsilon = 1e-15);
        for i in -9..=9 {
            let r = i as f64 / 10.0;
            assert_relative_eq!(nabeya_h(0.0, 0.0, r).unwrap(), FRAC_2_PI * psi(r), epsilon = 1e-14);
        }
        assert!(nabeya_h(0.9, 0.9, -0.9).is_err());
    }

    #[test]
    fn nabeya_matches_quadrature() {
        let (r12, r13, r23) = (0.3, 0.2, 0.5);
        let cov = GaussianBlockCov::new(DMatrix::from_row_slice(3, 3, &[1.0, r12, r13, r12, 1.0, r23, r13, r23, 1.0]))
            .unwrap();
        let q = mixed_abs_moment_quadrature(&PowerVector::new(vec![2.0, 1.0, 1.0]).unwrap(), &cov).unwrap();
        assert_relative_eq!(q.value, nabeya_h(r12, r13, r23).unwrap(), max_relative = 1e-9);
    }

    #[test]
    fn power_vector_fields() {
        let pv: PowerVector = "2, 0.5,0".parse().unwrap();
        assert_eq!(pv.p_plus, 2.5);
        assert_eq!(pv.p_min, 0.5);
        assert!(PowerVector::new(vec![]).is_err());
        assert!(PowerVector::new(vec![-1.0]).is_err());
    }

    #[test]
    fn block_validation() {
        assert!(GaussianBlockCov::pair(1.5).is_err());
        assert!(!GaussianBlockCov::pair(1.0).unwrap().non_degenerate);
        assert!(GaussianBlockCov::pair(0.5).unwrap().non_degenerate);
    }

    #[test]
    fn closed_forms_agree_with_quadrature() {
        let cov = GaussianBlockCov::pair(0.5).unwrap();
        let q = mixed_abs_moment_quadrature(&PowerVector::new(vec![2.0, 2.0]).unwrap(), &cov).unwrap();
        assert_relative_eq!(q.value, 1.5, max_relative = 1e-10);
        let q = mixed_abs_moment_quadrature(&PowerVector::new(vec![1.0, 1.0]).unwrap(), &cov).unwrap();
        assert_relative_eq!(q.value, FRAC_2_PI * psi(0.5), max_relative = 1e-10);
        let cov = GaussianBlockCov::pair(0.414214).unwrap();
        let m = mixed_abs_moment(&PowerVector::new(vec![1.0, 1.0]).unwrap(), &cov).unwrap();
        assert_relative_eq!(m, 0.692058, epsilon = 1e-6);
    }

    #[test]
    fn identity_and_zero_powers() {
        let pv = PowerVector::new(vec![2.0, 2.0]).unwrap();
        assert_relative_eq!(mixed_abs_moment(&pv, &GaussianBlockCov::identity(2)).unwrap(), 1.0);
        let pv = PowerVector::new(vec![2.0, 0.0]).unwrap();
        let cov = GaussianBlockCov::pair(0.9).unwrap();
        assert_eq!(mixed_abs_moment(&pv, &cov).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_block_rejected_for_quadrature() {
        let cov = GaussianBlockCov::pair(1.0).unwrap();
        let pv = PowerVector::new(vec![0.5, 1.5]).unwrap();
        assert!(matches!(mixed_abs_moment_quadrature(&pv, &cov), Err(Error::DegenerateCovariance(_))));
    }

    #[test]
    fn block_diagonal_factorizes() {
        let m = DMatrix::from_row_slice(4, 4, &[
            1.0, 0.4, 0.0, 0.0, //
            0.4, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, -0.3, //
            0.0, 0.0, -0.3, 1.0,
        ]);
        let cov = GaussianBlockCov::new(m).unwrap();
        let pv = PowerVector::new(vec![0.5, 1.5, 1.0, 3.0]).unwrap();
        let joint = mixed_abs_moment(&pv, &cov).unwrap();
        let a = mixed_abs_moment(&PowerVector::new(vec![0.5, 1.5]).unwrap(), &GaussianBlockCov::pair(0.4).unwrap()).unwrap();
        let b = mixed_abs_moment(&PowerVector::new(vec![1.0, 3.0]).unwrap(), &GaussianBlockCov::pair(-0.3).unwrap()).unwrap();
        assert_relative_eq!(joint, a * b, max_relative = 1e-8);
    }

    #[test]
    fn permutation_symmetry() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.3, 1.0, 0.4, -0.2, 0.4, 1.0]);
        let cov = GaussianBlockCov::new(m.clone()).unwrap();
        let pv = PowerVector::new(vec![0.7, 1.3, 2.5]).unwrap();
        let base = mixed_abs_moment(&pv, &cov).unwrap();
        let perm = [2usize, 0, 1];
        let pm = DMatrix::from_fn(3, 3, |a, b| m[(perm[a], perm[b])]);
        let ppv = PowerVector::new(perm.iter().map(|&i| pv.powers[i]).collect()).unwrap();
        let other = mixed_abs_moment(&ppv, &GaussianBlockCov::new(pm).unwrap()).unwrap();
        assert_relative_eq!(base, other, max_relative = 1e-8);
    }

    #[test]
    fn qmc_agrees_with_quadrature() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.2, 0.5, 1.0, 0.3, 0.2, 0.3, 1.0]);
        let cov = GaussianBlockCov::new(m).unwrap();
        let pv = PowerVector::new(vec![1.0, 0.5, 2.0]).unwrap();
        let q = mixed_abs_moment_quadrature(&pv, &cov).unwrap();
        let mc = mixed_abs_moment_qmc(&pv, &cov, 1 << 18, 1).unwrap();
        assert!((q.value - mc.value).abs() < 3.0 * (q.error + mc.error) + 1e-12, "{q:?} {mc:?}");
    }

    #[test]
    fn multipower_cov_examples() {
        let lc1 = crate::kernels::limit_correlation(1.0, 50).unwrap();
        let p2 = PowerVector::new(vec![2.0]).unwrap();
        let p11 = PowerVector::new(vec![1.0, 1.0]).unwrap();
        assert!(multipower_cov(&p11, &p11, &lc1, 2).unwrap().abs() < 1e-12);
        assert_relative_eq!(multipower_cov(&p2, &p2, &lc1, 0).unwrap(), 2.0, epsilon = 1e-12);
        let lc = crate::kernels::limit_correlation(1.5, 50).unwrap();
        let c = multipower_cov(&p2, &p2, &lc, 3).unwrap();
        assert_relative_eq!(c, 2.0 * lc.values[3].powi(2), max_relative = 1e-9);
    }
}
