use std::path::{Path, PathBuf};

use bss_core::asymptotics::{beta_matrix, bsm_constant_a, BetaOptions};
use bss_core::config::{parse_drift, parse_kernel, parse_model, parse_powers_list, parse_vol, ModelSpec};
use bss_core::gaussmom::{mu_p, nabeya_h, psi, PowerVector};
use bss_core::harness::{run, ExperimentConfig};
use bss_core::kernels::{check_conditions, limit_correlation};
use bss_core::mpv::{auto_tau, multipower, rvr, MpvResult, RvrResult};
use bss_core::pathsim::{
    add_drift, read_binary, read_csv, write_binary, write_csv, BssOptions, BssSampler, DriftSpec, PathBundle,
    VolatilityFamily,
};
use bss_core::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

/// Exit status when an experiment verdict fails.
const VERDICT_FAILED: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "bss", version, about = "Brownian semistationary processes: simulation and multipower variation")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one path and write it as CSV or binary.
    Simulate(SimulateArgs),
    /// Multipower variations and the variation ratio of a stored path.
    Estimate(EstimateArgs),
    /// Evaluate asymptotic constants.
    Constants(ConstantsArgs),
    /// Run a Monte Carlo experiment from a configuration file.
    Experiment(ExperimentArgs),
    /// Report which limit theorems apply to a kernel and power set.
    Conditions(ConditionsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Bin,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Kernel such as `powerlaw:delta=-0.3`, or `fgn:alpha=…`.
    #[arg(long)]
    kernel: String,
    /// Volatility, e.g. `const:1` or `expfrac:H=0.75,vol_of_vol=0.5`.
    #[arg(long, default_value = "const:1")]
    vol: String,
    #[arg(long)]
    n: usize,
    #[arg(long = "T", default_value_t = 1.0)]
    horizon: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    #[arg(long)]
    drift: Option<String>,
    #[arg(long)]
    drift_kernel: Option<String>,
    #[arg(long, default_value_t = 8)]
    subgrid: usize,
    #[arg(long)]
    truncation_depth: Option<f64>,
    /// Disable the kernel-weight variance calibration.
    #[arg(long)]
    no_calibrate: bool,
    #[arg(short = 'o', long)]
    output: PathBuf,
    /// Output format; defaults to binary for `.bin` files and CSV otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Path file written by `simulate` (CSV or `.bin`).
    #[arg(short = 'i', long)]
    input: PathBuf,
    /// Power vectors separated by `;`, e.g. `1,1;2,0`.
    #[arg(long, default_value = "2")]
    powers: String,
    /// Model giving `τ_n` and the centering constants.
    #[arg(long)]
    kernel: Option<String>,
    /// `auto` (root mean squared increment) or a number.
    #[arg(long)]
    tau: Option<String>,
    /// Output prefix; writes `<prefix>.json` and `<prefix>.csv`.
    #[arg(short = 'o', long)]
    output: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ConstantsArgs {
    /// `ψ(ρ)`.
    #[arg(long)]
    psi: Option<f64>,
    /// `E|N(0,1)|^p`.
    #[arg(long)]
    mu: Option<f64>,
    /// Limit correlations: `alpha=… jmax=…`.
    #[arg(long, num_args = 1..)]
    rho: Option<Vec<String>>,
    /// Semimartingale constant `A`: `powers=1,1`.
    #[arg(long = "A")]
    a: Option<String>,
    /// Asymptotic covariance: `alpha=… powers=2;1,1`.
    #[arg(long, num_args = 1..)]
    beta: Option<Vec<String>>,
    /// Nabeya function: `r12,r13,r23`.
    #[arg(long, allow_hyphen_values = true)]
    h: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(short = 'c', long)]
    config: PathBuf,
    /// Master seed; overrides the file's `seed`.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ConditionsArgs {
    #[arg(long)]
    kernel: String,
    #[arg(long, default_value = "2")]
    powers: String,
    /// Smoothness exponent of the volatility.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long)]
    json: bool,
}

pub fn dispatch(cli: Cli) -> Result<u8> {
    eprintln!("resolved: {:?}", cli.command);
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Constants(a) => constants(a),
        Command::Experiment(a) => experiment(a),
        Command::Conditions(a) => conditions(a),
    }
}

fn print_json(v: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn is_binary(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "bin")
}

fn simulate(a: SimulateArgs) -> Result<u8> {
    let model = parse_model(&a.kernel)?;
    let vol = parse_vol(&a.vol)?;
    let drift_kernel = a.drift_kernel.as_deref().map(parse_kernel).transpose()?;
    let drift = match &a.drift {
        Some(d) => parse_drift(d, drift_kernel.as_ref())?,
        None => DriftSpec::None,
    };
    let opts = BssOptions {
        truncation_depth: a.truncation_depth,
        subgrid: a.subgrid,
        calibrate: !a.no_calibrate,
        ..Default::default()
    };
    let sampler = match &model {
        ModelSpec::Kernel(k) => BssSampler::new(k, &vol, a.n, a.horizon, &opts)?,
        ModelSpec::Fgn { .. } => match vol.family {
            VolatilityFamily::Constant(c) => BssSampler::from_covariance(&model.covariance()?, c, a.n, a.horizon)?,
            _ => return Err(Error::Validation("fgn models only support constant volatility".into())),
        },
    };
    let bundle = add_drift(sampler.sample(a.seed, a.replicate), &drift, model.kernel())?;
    let binary = match a.format {
        Some(Format::Bin) => true,
        Some(Format::Csv) => false,
        None => is_binary(&a.output),
    };
    if binary {
        write_binary(&bundle, &a.output)?;
    } else {
        write_csv(&bundle, &a.output)?;
    }
    let summary = json!({
        "output": a.output,
        "points": bundle.len(),
        "meta": bundle.meta,
    });
    if a.json {
        print_json(&summary)?;
    } else {
        println!("wrote {} points to {}", bundle.len(), a.output.display());
        println!("method {}", bundle.meta.method);
        if let Some(c) = bundle.meta.calibration_factor {
            println!("calibration factor {c:.6}");
        }
        for w in &bundle.meta.warnings {
            println!("warning: {w}");
        }
    }
    Ok(0)
}

fn load_path(path: &Path) -> Result<PathBundle> {
    if is_binary(path) {
        read_binary(path)
    } else {
        read_csv(path)
    }
}

fn estimate(a: EstimateArgs) -> Result<u8> {
    let powers = parse_powers_list(&a.powers)?;
    let bundle = load_path(&a.input)?;
    let series = bundle
        .series()
        .ok_or_else(|| Error::Data(format!("{} has no observed series", a.input.display())))?;
    let n = bundle.n;
    let model = a.kernel.as_deref().map(|k| parse_model(k).and_then(|m| m.covariance())).transpose()?;
    let (tau, tau_source) = match (a.tau.as_deref(), &model) {
        (Some("auto"), _) => (auto_tau(series)?, "auto".to_string()),
        (Some(v), _) => (
            v.parse::<f64>().map_err(|_| Error::Validation(format!("--tau expects 'auto' or a number, got '{v}'")))?,
            "given".to_string(),
        ),
        (None, Some(m)) => (m.tau_n(n)?, format!("model {}", m.id())),
        (None, None) => return Err(Error::Validation("give --kernel or --tau to fix the normalization".into())),
    };
    let results: Vec<MpvResult> = powers
        .iter()
        .map(|pv| {
            let r = multipower(series, n, pv, tau, None)?;
            match &model {
                Some(m) => r.with_centering(m),
                None => Ok(r),
            }
        })
        .collect::<Result<_>>()?;
    let has = |p: &[f64]| powers.iter().any(|pv| pv.powers == p);
    let ratio: Option<RvrResult> =
        if has(&[1.0, 1.0]) && (has(&[2.0, 0.0]) || has(&[2.0])) { Some(rvr(series, n, model.as_ref(), None)?) } else { None };
    let out = json!({
        "input": a.input,
        "n": n,
        "tau": tau,
        "tau_source": tau_source,
        "statistics": results,
        "rvr": ratio,
    });
    if let Some(prefix) = &a.output {
        std::fs::write(prefix.with_extension("json"), serde_json::to_string_pretty(&out)?)?;
        std::fs::write(prefix.with_extension("csv"), estimate_csv(&results, ratio.as_ref()))?;
    }
    if a.json {
        print_json(&out)?;
    } else {
        println!("tau {tau:.6e} ({tau_source})");
        for r in &results {
            print!("V({})_T = {:.6}", r.pv.label(), r.terminal());
            if let Some(c) = r.centering {
                print!("  centering rho_n = {:.6}", c.rho_n);
            }
            println!();
        }
        if let Some(r) = &ratio {
            println!("RVR_T = {:.6}", r.terminal());
        }
    }
    Ok(0)
}

fn estimate_csv(results: &[MpvResult], ratio: Option<&RvrResult>) -> String {
    let mut s = String::from("statistic,t,value\n");
    for r in results {
        for (t, v) in r.t_grid.iter().zip(&r.values) {
            s.push_str(&format!("\"V({})\",{t:e},{v:e}\n", r.pv.label()));
        }
    }
    if let Some(r) = ratio {
        for (t, v) in r.t_grid.iter().zip(&r.rvr_t) {
            s.push_str(&format!("RVR,{t:e},{v:e}\n"));
        }
    }
    s
}

/// Parses `key=value` tokens separated by spaces or commas; `powers` keeps its commas.
fn key_values(tokens: &[String]) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for tok in tokens {
        for part in tok.split(',') {
            match part.split_once('=') {
                Some((k, v)) => out.push((k.trim().to_string(), v.trim().to_string())),
                None => match out.last_mut() {
                    Some((k, v)) if k == "powers" => {
                        v.push(',');
                        v.push_str(part.trim());
                    }
                    _ => return Err(Error::Validation(format!("expected key=value, got '{part}'"))),
                },
            }
        }
    }
    Ok(out)
}

fn lookup<'a>(kv: &'a [(String, String)], key: &str) -> Result<&'a str> {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::Validation(format!("missing '{key}='")))
}

fn number(s: &str, what: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Validation(format!("{what} expects a number, got '{s}'")))
}

fn constants(a: ConstantsArgs) -> Result<u8> {
    let mut out = serde_json::Map::new();
    let mut lines = Vec::new();
    if let Some(r) = a.psi {
        if !(-1.0..=1.0).contains(&r) {
            return Err(Error::Domain(format!("psi needs rho in [-1, 1], got {r}")));
        }
        let v = psi(r);
        lines.push(format!("psi({r}) = {v:.6} [closed_form]"));
        out.insert("psi".into(), json!({"rho": r, "value": v, "method": "closed_form"}));
    }
    if let Some(p) = a.mu {
        if !(p > -1.0) {
            return Err(Error::Domain(format!("mu_p needs p > -1, got {p}")));
        }
        let v = mu_p(p);
        lines.push(format!("mu_{p} = {v:.12} [closed_form]"));
        out.insert("mu".into(), json!({"p": p, "value": v, "method": "closed_form"}));
    }
    if let Some(tokens) = &a.rho {
        let kv = key_values(tokens)?;
        let alpha = number(lookup(&kv, "alpha")?, "alpha")?;
        let jmax = number(lookup(&kv, "jmax")?, "jmax")? as usize;
        let lc = limit_correlation(alpha, jmax)?;
        let values: Vec<f64> = (1..=jmax).map(|j| lc.get(j)).collect();
        for (j, v) in values.iter().enumerate() {
            lines.push(format!("rho({}) = {v:.6}", j + 1));
        }
        out.insert("rho".into(), json!({"alpha": alpha, "values": values, "method": "closed_form"}));
    }
    if let Some(spec) = &a.a {
        let pv: PowerVector = spec.strip_prefix("powers=").unwrap_or(spec).parse()?;
        let v = bsm_constant_a(&pv);
        lines.push(format!("A({}) = {v:.6} [closed_form]", pv.label()));
        out.insert("A".into(), json!({"powers": pv.powers, "value": v, "method": "closed_form"}));
    }
    if let Some(tokens) = &a.beta {
        let kv = key_values(tokens)?;
        let alpha = number(lookup(&kv, "alpha")?, "alpha")?;
        let fams = parse_powers_list(lookup(&kv, "powers").unwrap_or("2"))?;
        let b = beta_matrix(&fams, alpha, &BetaOptions::default())?;
        for i in 0..b.dim {
            for j in 0..b.dim {
                let e = &b.entries[i * b.dim + j];
                lines.push(format!(
                    "beta[{},{}] = {:.6} +- {:.1e} [{:?}, {} lags]",
                    fams[i].label(),
                    fams[j].label(),
                    e.value,
                    e.tail_bound,
                    e.method,
                    e.lags
                ));
            }
        }
        lines.extend(b.warnings.iter().map(|w| format!("warning: {w}")));
        out.insert("beta".into(), serde_json::to_value(&b)?);
    }
    if let Some(h) = &a.h {
        let r: Vec<f64> = h.split(',').map(|t| number(t.trim(), "h")).collect::<Result<_>>()?;
        if r.len() != 3 {
            return Err(Error::Validation("--h expects r12,r13,r23".into()));
        }
        let v = nabeya_h(r[0], r[1], r[2])?;
        lines.push(format!("h({}, {}, {}) = {v:.6} [closed_form]", r[0], r[1], r[2]));
        out.insert("h".into(), json!({"rho": r, "value": v, "method": "closed_form"}));
    }
    if out.is_empty() {
        return Err(Error::Validation("request at least one constant (see --help)".into()));
    }
    if a.json {
        print_json(&Value::Object(out))?;
    } else {
        for l in lines {
            println!("{l}");
        }
    }
    Ok(0)
}

fn experiment(a: ExperimentArgs) -> Result<u8> {
    let mut cfg = ExperimentConfig::from_file(&a.config)?;
    cfg.seed = a.seed;
    cfg.echo.insert("seed".into(), a.seed.to_string());
    let report = run(&cfg)?;
    let json_path = a.out_json.or(cfg.output_json.clone());
    let csv_path = a.out_csv.or(cfg.output_csv.clone());
    report.write(json_path.as_deref(), csv_path.as_deref())?;
    if a.json {
        println!("{}", report.to_json()?);
    } else {
        println!("{} ({:?}, seed {}, R={})", report.name, report.kind, report.seed, report.replications);
        for r in &report.rows {
            let target = r.target.map(|t| format!("  target {t:.6}")).unwrap_or_default();
            println!("n={:>6} {:<32} mean {:.6} se {:.2e}{target}", r.n, r.statistic, r.mean, r.se);
        }
        for c in &report.clt {
            println!(
                "{}: KS D={:.4} p={:.4}, variance {:.4} vs {:.4} (ratio {:.3})",
                c.statistic, c.ks_statistic, c.ks_p_value, c.variance_empirical, c.variance_predicted, c.variance_ratio
            );
        }
        for w in &report.warnings {
            println!("warning: {w}");
        }
        for l in report.verdict_lines() {
            println!("{l}");
        }
    }
    Ok(if report.passed { 0 } else { VERDICT_FAILED })
}

fn conditions(a: ConditionsArgs) -> Result<u8> {
    let kernel = parse_kernel(&a.kernel)?;
    let powers = parse_powers_list(&a.powers)?;
    let rep = check_conditions(&kernel, &powers, a.gamma)?;
    if a.json {
        print_json(&serde_json::to_value(&rep)?)?;
    } else {
        println!("kernel {}", rep.kernel);
        println!("lln_ok={}", rep.lln_ok);
        println!("clt_ok={}", rep.clt_ok);
        if let Some(al) = rep.alpha {
            println!("alpha={al:.6}");
        }
        println!("required_gamma={:.6} (given {})", rep.required_gamma, rep.gamma_vol);
        println!("delta_bounds=({}, {:.6})", rep.delta_bounds.0, rep.delta_bounds.1);
        for n in &rep.notes {
            println!("note: {n}");
        }
    }
    Ok(0)
}
