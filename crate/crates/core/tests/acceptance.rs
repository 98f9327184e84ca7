//! Acceptance suite: one PASS/FAIL line per criterion, plus non-gating diagnostics.
//!
//! Every criterion runs twice; criterion 9 compares the two transcripts byte for byte.

use std::f64::consts::{FRAC_2_PI, PI};
use std::path::PathBuf;
use std::time::Instant;

use bss_core::asymptotics::{beta12_h_series, beta_entry, BetaOptions};
use bss_core::config::parse_kernel;
use bss_core::gaussmom::{mu_p, multipower_cov, nabeya_h, psi, PowerVector};
use bss_core::harness::{run, ExperimentConfig, ExperimentReport};
use bss_core::kernels::{build_covariance, limit_correlation, pi_tail_slope, pi_window_slope, CovarianceModel};
use bss_core::mpv::multipower;
use bss_core::numerics::quad::QuadConfig;
use bss_core::pathsim::BssSampler;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Outcome of one criterion: verdict, the lines to print, and a transcript for the determinism check.
struct Outcome {
    passed: bool,
    lines: Vec<String>,
    transcript: String,
}

impl Outcome {
    fn new() -> Self {
        Self { passed: true, lines: Vec::new(), transcript: String::new() }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.transcript.push_str(&line);
        self.transcript.push('\n');
        self.lines.push(format!("    [{}] {line}", if ok { "ok" } else { "x" }));
    }

    fn diagnostic(&mut self, line: String) {
        self.transcript.push_str(&line);
        self.transcript.push('\n');
        self.lines.push(format!("    diagnostic: {line}"));
    }

    fn report(&mut self, r: &ExperimentReport) {
        self.passed &= r.passed;
        self.transcript.push_str(&r.to_json().expect("report serializes"));
        for l in r.verdict_lines() {
            self.lines.push(format!("    [{}] {}: {l}", if l.contains(" PASS ") { "ok" } else { "x" }, r.name));
        }
    }
}

fn config(name: &str) -> ExperimentConfig {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "cli", "configs", name].iter().collect();
    ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn run_config(out: &mut Outcome, name: &str) {
    match run(&config(name)) {
        Ok(r) => out.report(&r),
        Err(e) => out.check(false, format!("{name}: {e}")),
    }
}

fn rho_direct(alpha: f64, j: usize) -> f64 {
    let j = j as f64;
    0.5 * ((j + 1.0).powf(alpha) - 2.0 * j.powf(alpha) + (j - 1.0).abs().powf(alpha))
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    let exact = [1.0, (2.0 / PI).sqrt(), 1.0, 2.0 * (2.0 / PI).sqrt(), 3.0];
    let worst = (0..5).map(|p| (mu_p(p as f64) - exact[p]).abs()).fold(0.0, f64::max);
    o.check(worst <= 1e-12, format!("mu_p for p=0..4: max error {worst:.2e} (<= 1e-12)"));

    for (k, &r) in [-0.9, -0.5, 0.0, 0.414214, 0.9].iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let c = (1.0f64 - r * r).sqrt();
        let (mut s, mut s2) = (0.0, 0.0);
        let draws = 10_000_000;
        for _ in 0..draws {
            let u: f64 = rng.sample(StandardNormal);
            let e: f64 = rng.sample(StandardNormal);
            let v = (u * (r * u + c * e)).abs();
            s += v;
            s2 += v * v;
        }
        let m = s / draws as f64;
        let se = ((s2 / draws as f64 - m * m) / draws as f64).sqrt() * PI / 2.0;
        let mc = PI / 2.0 * m;
        let z = (psi(r) - mc).abs() / se;
        o.check(z <= 3.0, format!("psi({r}) = {:.6} vs MC {mc:.6}: {z:.2} SE", psi(r)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..10 {
        // random correlation matrix from a Gaussian factor
        let a: Vec<f64> = (0..9).map(|_| rng.sample(StandardNormal)).collect();
        let mut s = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] = (0..3).map(|m| a[3 * i + m] * a[3 * j + m]).sum();
            }
        }
        let corr = |i: usize, j: usize| s[i][j] / (s[i][i] * s[j][j]).sqrt();
        let (r12, r13, r23) = (corr(0, 1), corr(0, 2), corr(1, 2));
        // Cholesky factor of the correlation matrix
        let l21 = r12;
        let l22 = (1.0 - l21 * l21).sqrt();
        let l31 = r13;
        let l32 = (r23 - l31 * l21) / l22;
        let l33 = (1.0 - l31 * l31 - l32 * l32).max(0.0).sqrt();
        let draws = 2_000_000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..draws {
            let z: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let x1 = z[0];
            let x2 = l21 * z[0] + l22 * z[1];
            let x3 = l31 * z[0] + l32 * z[1] + l33 * z[2];
            let v = (x1 * x1 * x2 * x3).abs();
            m1 += v;
            m2 += v * v;
        }
        let m = m1 / draws as f64;
        let se = ((m2 / draws as f64 - m * m) / draws as f64).sqrt();
        let h = nabeya_h(r12, r13, r23).expect("valid correlations");
        let z = (h - m).abs() / se;
        o.check(z <= 3.0, format!("h triple {k} ({r12:.3},{r13:.3},{r23:.3}) = {h:.6} vs MC {m:.6}: {z:.2} SE"));
    }

    let min_psi = (0..=2000).map(|i| psi(-1.0 + i as f64 / 1000.0)).fold(f64::INFINITY, f64::min);
    o.check(min_psi >= 1.0, format!("min psi over a 2001-point grid = {min_psi:.12} (>= 1)"));
    o
}

fn criterion_2() -> Outcome {
    let mut o = Outcome::new();
    let n = 4096;
    let cfg = QuadConfig::default();
    let ns: Vec<usize> = (8..=14).map(|k| 1usize << k).collect();
    for delta in [-0.3, 0.25] {
        let alpha = 2.0 * delta + 1.0;
        let spec = parse_kernel(&format!("powerlaw:delta={delta}")).unwrap();
        let model = build_covariance(&spec, &cfg).unwrap();
        let worst = (1..=5)
            .map(|j| (model.r_n(n, j).unwrap() - rho_direct(alpha, j)).abs())
            .fold(0.0, f64::max);
        o.check(worst <= 0.01, format!("delta={delta}: max_j<=5 |r_n(j) - rho(j)| at n=2^12 = {worst:.4} (<= 0.01)"));
        let (slope, _) = pi_tail_slope(&spec, &ns, 0.1, &cfg).unwrap();
        let target = 2.0 * delta - 1.0;
        o.check(
            (slope - target).abs() <= 0.1,
            format!("delta={delta}: pi^n((0.1, inf)) log-log slope {slope:.3} vs {target:.1} (tolerance 0.1)"),
        );
        let (inner, _) = pi_window_slope(&spec, &ns, 0.1, 0.9, &cfg).unwrap();
        o.diagnostic(format!("delta={delta}: pi^n((0.1, 0.9)) slope {inner:.3}"));
        // the continuous gamma kernel with the same exponent at zero
        let gamma = parse_kernel(&format!("gamma:nu={},lambda=1", delta + 1.0)).unwrap();
        let gm = build_covariance(&gamma, &cfg).unwrap();
        let gw = (1..=5).map(|j| (gm.r_n(n, j).unwrap() - rho_direct(alpha, j)).abs()).fold(0.0, f64::max);
        o.diagnostic(format!("gamma nu={}: max_j<=5 |r_n(j) - rho(j)| = {gw:.4}", delta + 1.0));
    }
    o
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::new();
    run_config(&mut o, "lln_powerlaw.cfg");
    run_config(&mut o, "lln_powerlaw_expfrac.cfg");
    o
}

fn criterion_4() -> Outcome {
    let mut o = Outcome::new();
    run_config(&mut o, "clt_powerlaw.cfg");
    run_config(&mut o, "clt_joint.cfg");
    run_config(&mut o, "clt_brownian.cfg");
    o
}

/// `n·Var V(2)_1` over fractional Gaussian noise paths, with its standard error.
fn fgn_scaled_variance(alpha: f64, n: usize, paths: usize, seed: u64) -> (f64, f64) {
    let model = CovarianceModel::power_law(alpha, 1.0).unwrap();
    let sampler = BssSampler::from_covariance(&model, 1.0, n, 1.0).unwrap();
    let tau = model.tau_n(n).unwrap();
    let pv = PowerVector::new(vec![2.0]).unwrap();
    let t = [1.0];
    let v: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|r| {
            let b = sampler.sample(seed, r);
            multipower(b.series().unwrap(), n, &pv, tau, Some(&t)).unwrap().terminal()
        })
        .collect();
    let m = v.iter().sum::<f64>() / paths as f64;
    let dev: Vec<f64> = v.iter().map(|x| (x - m).powi(2)).collect();
    let var = dev.iter().sum::<f64>() / (paths as f64 - 1.0);
    let dm = dev.iter().sum::<f64>() / paths as f64;
    let se = (dev.iter().map(|d| (d - dm).powi(2)).sum::<f64>() / (paths as f64 - 1.0) / paths as f64).sqrt();
    (n as f64 * var, n as f64 * se)
}

fn criterion_5() -> Outcome {
    let mut o = Outcome::new();
    let opts = BetaOptions::default();
    let p2 = PowerVector::new(vec![2.0]).unwrap();
    for (k, alpha) in [0.4, 1.0, 1.4].into_iter().enumerate() {
        let b = beta_entry(&p2, &p2, alpha, &opts).unwrap();
        let (mc, se) = fgn_scaled_variance(alpha, 4096, 10_000, 500 + k as u64);
        let z = (b.value - mc).abs() / se;
        o.check(z <= 3.0, format!("alpha={alpha}: beta22 {:.4} vs n*Var MC {mc:.4} (SE {se:.4}): {z:.2} SE", b.value));
    }

    let alpha = 0.4;
    let h = beta12_h_series(alpha, 10_000).unwrap();
    let (a, c) = (PowerVector::new(vec![1.0, 1.0]).unwrap(), PowerVector::new(vec![2.0, 0.0]).unwrap());
    let rho = limit_correlation(alpha, 600).unwrap();
    let lags = 512;
    let terms: Vec<f64> = (1..=lags)
        .into_par_iter()
        .map(|l| multipower_cov(&a, &c, &rho, l).unwrap() + multipower_cov(&c, &a, &rho, l).unwrap())
        .collect();
    let direct = multipower_cov(&a, &c, &rho, 0).unwrap() + terms.iter().sum::<f64>();
    // lag terms decay like l^(2α−4)
    let last = terms[lags - 1].abs();
    let tail = last * lags as f64 / (3.0 - 2.0 * alpha);
    let tol = h.tail_bound + tail + 1e-6;
    let diff = (h.value - direct).abs();
    o.check(
        diff <= tol,
        format!("beta12 h-series {:.6} vs covariance sum {direct:.6}: |diff| {diff:.2e} (<= {tol:.2e})", h.value),
    );

    let b1 = beta_entry(&p2, &p2, 1.0, &opts).unwrap().value;
    o.check(b1 == 2.0, format!("alpha=1: beta22 = {b1} (exactly 2)"));
    o
}

fn criterion_6() -> Outcome {
    let mut o = Outcome::new();
    run_config(&mut o, "degenerate_exp.cfg");
    run_config(&mut o, "degenerate_exp_sine.cfg");
    let w0 = 1.0 / (1.0 + (-2.0f64).exp());
    let w1 = 1.0 / (1.0 + 2.0f64.exp());
    o.diagnostic(format!("two-term weights at lambda=1: {w0:.6} + {w1:.6} = {:.12}", w0 + w1));
    o
}

fn criterion_7() -> Outcome {
    let mut o = Outcome::new();
    run_config(&mut o, "rvr_turbulence.cfg");
    run_config(&mut o, "rvr_clt.cfg");
    let a = 1.5;
    let target = (1.0 - rho_direct(a, 1).powi(2)).sqrt() + rho_direct(a, 1) * rho_direct(a, 1).asin();
    o.diagnostic(format!("psi(rho(1)) at alpha=1.5 = {target:.6}; (2/pi)*psi = {:.6}", FRAC_2_PI * target));
    let model = build_covariance(&parse_kernel("powerlaw:delta=0.25").unwrap(), &QuadConfig::default()).unwrap();
    o.diagnostic(format!("powerlaw delta=0.25: r_n(1) at n=2^12 = {:.6}", model.r_n(4096, 1).unwrap()));
    let mut cfg = config("rvr_turbulence.cfg");
    cfg.model = bss_core::config::parse_model("gamma:nu=1.25,lambda=1").unwrap();
    cfg.name = "rvr_gamma_diagnostic".into();
    match run(&cfg) {
        Ok(r) => {
            let row = r.rows.iter().rev().find(|row| row.statistic == "rvr").unwrap();
            o.diagnostic(format!("gamma nu=1.25 (alpha=1.5): mean RVR {:.6} (se {:.1e}) vs {target:.6}", row.mean, row.se));
        }
        Err(e) => o.diagnostic(format!("gamma diagnostic failed: {e}")),
    }
    o
}

fn criterion_8() -> Outcome {
    let mut o = Outcome::new();
    run_config(&mut o, "robustness_lipschitz.cfg");
    match run(&config("robustness_smoother.cfg")) {
        Ok(r) => {
            for row in r.rows.iter().filter(|row| row.statistic.starts_with("abs_diff")) {
                o.diagnostic(format!("smoother BSS drift: n={} mean |dV| {:.2e}", row.n, row.mean));
            }
        }
        Err(e) => o.diagnostic(format!("smoother drift diagnostic failed: {e}")),
    }
    o
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 8] = [
        (1, "closed-form oracles", criterion_1),
        (2, "correlation limits", criterion_2),
        (3, "law of large numbers", criterion_3),
        (4, "central limit theorem", criterion_4),
        (5, "beta numerics", criterion_5),
        (6, "degenerate exponential kernel", criterion_6),
        (7, "realised variation ratio", criterion_7),
        (8, "drift robustness", criterion_8),
    ];
    let mut failures = 0;
    let mut deterministic = true;
    let mut mismatched = Vec::new();
    for (k, name, f) in criteria {
        let start = Instant::now();
        let first = f();
        let elapsed = start.elapsed().as_secs_f64();
        let second = f();
        if first.transcript != second.transcript {
            deterministic = false;
            mismatched.push(k);
        }
        println!("criterion {k} ({name}): {} [{elapsed:.1}s]", if first.passed { "PASS" } else { "FAIL" });
        for l in &first.lines {
            println!("{l}");
        }
        if !first.passed {
            failures += 1;
        }
    }
    println!(
        "criterion 9 (determinism): {}{}",
        if deterministic { "PASS" } else { "FAIL" },
        if deterministic { String::new() } else { format!(" (transcripts differ for {mismatched:?})") }
    );
    if !deterministic {
        failures += 1;
    }
    println!("{failures} of 9 criteria failed");
    if failures > 0 {
        std::process::exit(1);
    }
}
