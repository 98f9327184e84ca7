//! Seeded Monte Carlo experiments that check the limit theorems at finite `n`.
//!
//! Replicate `r` at the `i`-th entry of `n_list` draws from the streams of
//! replicate id `(i << 32) | r` under the master seed (see [`crate::rng`]).
//! Replicates run in parallel and are reduced in index order, so a report is a
//! pure function of its configuration.

mod runs;

pub use runs::{run, run_clt, run_degenerate_exp, run_lln, run_robustness, run_rvr};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{parse_drift, parse_kernel, parse_key_values, parse_model, parse_powers_list, parse_vol, ModelSpec};
use crate::error::{Error, Result};
use crate::gaussmom::PowerVector;
use crate::mpv::CenteringMode;
use crate::pathsim::{DriftSpec, VolatilityModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Lln,
    Clt,
    Rvr,
    DegenerateExp,
    Robustness,
}

impl ExperimentKind {
    /// Acceptance rule checked by this kind of experiment.
    pub fn rule(self) -> u32 {
        match self {
            ExperimentKind::Lln => 3,
            ExperimentKind::Clt => 4,
            ExperimentKind::DegenerateExp => 6,
            ExperimentKind::Rvr => 7,
            ExperimentKind::Robustness => 8,
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "lln" => Self::Lln,
            "clt" => Self::Clt,
            "rvr" => Self::Rvr,
            "degenerate_exp" | "degenerateexp" => Self::DegenerateExp,
            "robustness" => Self::Robustness,
            other => return Err(Error::validation(format!("unknown experiment kind '{other}'"))),
        })
    }
}

/// Pass/fail thresholds; all are overridable with `threshold.<name>=` keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub lln_error: f64,
    pub variance_band: f64,
    pub ks_level: f64,
    pub frobenius: f64,
    pub rvr_error: f64,
    pub degenerate_error: f64,
    pub robust_error: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            lln_error: 0.05,
            variance_band: 0.15,
            ks_level: 0.01,
            frobenius: 0.2,
            rvr_error: 0.02,
            degenerate_error: 0.03,
            robust_error: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    pub model: ModelSpec,
    pub vol: VolatilityModel,
    pub powers: Vec<PowerVector>,
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub centering: CenteringMode,
    pub horizon: f64,
    pub subgrid: usize,
    pub truncation_depth: Option<f64>,
    pub drift: DriftSpec,
    pub thresholds: Thresholds,
    pub output_json: Option<PathBuf>,
    pub output_csv: Option<PathBuf>,
    /// The `key=value` pairs the configuration was built from.
    pub echo: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Parses a `key=value` experiment file. Required keys: `kind`, `kernel`,
    /// `n_list`, `replications`, `seed`.
    pub fn parse(text: &str) -> Result<Self> {
        let kv = parse_key_values(text)?;
        let echo = kv.clone();
        let mut kv = kv;
        let mut take = |k: &str| kv.remove(k);
        let req = |v: Option<String>, k: &str| v.ok_or_else(|| Error::validation(format!("missing key '{k}'")));
        let num = |v: &str, k: &str| -> Result<f64> {
            v.parse::<f64>().map_err(|_| Error::validation(format!("'{k}' expects a number, got '{v}'")))
        };
        let int = |v: &str, k: &str| -> Result<u64> {
            v.parse::<u64>().map_err(|_| Error::validation(format!("'{k}' expects a non-negative integer, got '{v}'")))
        };

        let kind: ExperimentKind = req(take("kind"), "kind")?.parse()?;
        let model = parse_model(&req(take("kernel"), "kernel")?)?;
        let vol = match take("vol") {
            Some(v) => parse_vol(&v)?,
            None => VolatilityModel::constant(1.0),
        };
        let powers = match take("powers") {
            Some(p) => parse_powers_list(&p)?,
            None => vec![PowerVector::new(vec![2.0])?],
        };
        let n_list = req(take("n_list"), "n_list")?
            .split(',')
            .map(|t| int(t.trim(), "n_list").map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let replications = int(&req(take("replications"), "replications")?, "replications")? as usize;
        let seed = int(&req(take("seed"), "seed")?, "seed")?;
        let centering = match take("centering").as_deref() {
            None | Some("finite_n") => CenteringMode::FiniteN,
            Some("limit") => CenteringMode::Limit,
            Some(o) => return Err(Error::validation(format!("unknown centering '{o}'"))),
        };
        let horizon = take("horizon").map(|v| num(&v, "horizon")).transpose()?.unwrap_or(1.0);
        let subgrid = take("subgrid").map(|v| int(&v, "subgrid")).transpose()?.unwrap_or(8) as usize;
        let truncation_depth = take("truncation_depth").map(|v| num(&v, "truncation_depth")).transpose()?;
        let drift_kernel = take("drift_kernel").map(|k| parse_kernel(&k)).transpose()?;
        let drift = match take("drift") {
            Some(d) => parse_drift(&d, drift_kernel.as_ref())?,
            None => DriftSpec::None,
        };
        let mut thresholds = Thresholds::default();
        for (key, slot) in [
            ("threshold.lln_error", &mut thresholds.lln_error),
            ("threshold.variance_band", &mut thresholds.variance_band),
            ("threshold.ks_level", &mut thresholds.ks_level),
            ("threshold.frobenius", &mut thresholds.frobenius),
            ("threshold.rvr_error", &mut thresholds.rvr_error),
            ("threshold.degenerate_error", &mut thresholds.degenerate_error),
            ("threshold.robust_error", &mut thresholds.robust_error),
        ] {
            if let Some(v) = take(key) {
                *slot = num(&v, key)?;
            }
        }
        let name = take("name").unwrap_or_else(|| format!("{kind:?}").to_ascii_lowercase());
        let output_json = take("output_json").map(PathBuf::from);
        let output_csv = take("output_csv").map(PathBuf::from);
        if let Some(k) = kv.keys().next() {
            return Err(Error::validation(format!("unknown configuration key '{k}'")));
        }
        let cfg = Self {
            name,
            kind,
            model,
            vol,
            powers,
            n_list,
            replications,
            seed,
            centering,
            horizon,
            subgrid,
            truncation_depth,
            drift,
            thresholds,
            output_json,
            output_csv,
            echo,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("n_list must be non-empty and strictly increasing"));
        }
        if self.replications < 2 {
            return Err(Error::validation("replications must be at least 2"));
        }
        if self.kind == ExperimentKind::Clt && self.replications < 100 {
            return Err(Error::validation(format!(
                "CLT experiments need at least 100 replications, got {}",
                self.replications
            )));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::validation("horizon must be positive"));
        }
        if self.subgrid == 0 {
            return Err(Error::validation("subgrid must be at least 1"));
        }
        if matches!(self.model, ModelSpec::Fgn { .. }) && !self.vol.is_constant() {
            return Err(Error::validation("fgn models only support constant volatility"));
        }
        self.vol.validate()
    }
}

/// One pass/fail decision tied to a numbered acceptance rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub rule: u32,
    pub check: String,
    pub observed: f64,
    /// Human-readable condition such as `< 0.05`.
    pub requirement: String,
    pub passed: bool,
}

/// Monte Carlo summary of one statistic at one grid frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub n: usize,
    pub statistic: String,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    /// Reference value, when the statistic has one.
    pub target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltDiagnostics {
    pub statistic: String,
    pub n: usize,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub variance_empirical: f64,
    pub variance_predicted: f64,
    pub variance_ratio: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub kind: ExperimentKind,
    pub code_version: String,
    pub seed: u64,
    pub replications: usize,
    pub model: String,
    pub volatility: String,
    pub config: BTreeMap<String, String>,
    pub rows: Vec<Row>,
    pub clt: Vec<CltDiagnostics>,
    pub verdicts: Vec<Verdict>,
    pub warnings: Vec<String>,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The summary table as CSV text.
    pub fn rows_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "statistic", "mean", "sd", "se", "target"])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.statistic.clone(),
                format!("{:e}", r.mean),
                format!("{:e}", r.sd),
                format!("{:e}", r.se),
                r.target.map(|t| format!("{t:e}")).unwrap_or_default(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Verdict lines such as `rule 3 PASS sup-error decreasing (2): …`.
    pub fn verdict_lines(&self) -> Vec<String> {
        self.verdicts
            .iter()
            .map(|v| {
                format!(
                    "rule {} {} {}: observed {:.6} (required {})",
                    v.rule,
                    if v.passed { "PASS" } else { "FAIL" },
                    v.check,
                    v.observed,
                    v.requirement
                )
            })
            .collect()
    }

    /// Writes JSON and CSV next to the configured paths, when set.
    pub fn write(&self, json: Option<&Path>, csv_path: Option<&Path>) -> Result<()> {
        if let Some(p) = json {
            std::fs::write(p, self.to_json()?)?;
        }
        if let Some(p) = csv_path {
            std::fs::write(p, self.rows_csv()?)?;
        }
        Ok(())
    }
}
