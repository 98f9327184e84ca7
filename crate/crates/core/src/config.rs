//! Text forms of kernels, volatility models, drifts and power vectors.
//!
//! One-line specs follow `family[:key=value[,key=value]*]`, for example
//! `powerlaw:delta=-0.3`, `gamma:nu=0.75,lambda=1` or `const:2` (a bare value
//! after the colon is stored under the key `value`). Kernels also have a
//! multi-line `key=value` form that carries quadrature tolerances.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gaussmom::PowerVector;
use crate::kernels::{build_covariance, CovarianceModel, Extrapolation, KernelFamily, KernelSpec};
use crate::numerics::quad::QuadConfig;
use crate::pathsim::{DetFn, DriftSpec, VolatilityModel};

/// A `family[:k=v,...]` spec split into its family and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagSpec {
    pub family: String,
    pub params: BTreeMap<String, String>,
}

impl FlagSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, rest) = match s.split_once(':') {
            Some((f, r)) => (f.trim(), Some(r)),
            None => (s, None),
        };
        if family.is_empty() {
            return Err(Error::validation(format!("missing family in '{s}'")));
        }
        let mut params = BTreeMap::new();
        if let Some(rest) = rest {
            for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let (k, v) = match item.split_once('=') {
                    Some((k, v)) => (k.trim(), v.trim()),
                    None => ("value", item),
                };
                if params.insert(k.to_string(), v.to_string()).is_some() {
                    return Err(Error::validation(format!("duplicate key '{k}' in '{s}'")));
                }
            }
        }
        Ok(Self { family: family.to_ascii_lowercase(), params })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.params.remove(key)
    }

    fn num(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::validation(format!("{}: '{key}' expects a number, got '{v}'", self.family)))
            })
            .transpose()
    }

    fn req(&mut self, key: &str) -> Result<f64> {
        self.num(key)?
            .ok_or_else(|| Error::validation(format!("{}: missing parameter '{key}'", self.family)))
    }

    fn finish(self) -> Result<()> {
        match self.params.keys().next() {
            Some(k) => Err(Error::validation(format!("{}: unknown parameter '{k}'", self.family))),
            None => Ok(()),
        }
    }
}

/// A kernel, or a covariance-only fractional Gaussian noise model with `R̄(t) = t^α`.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Kernel(KernelSpec),
    Fgn { alpha: f64 },
}

impl ModelSpec {
    pub fn id(&self) -> String {
        match self {
            ModelSpec::Kernel(k) => k.id(),
            ModelSpec::Fgn { alpha } => format!("fgn(alpha={alpha})"),
        }
    }

    pub fn kernel(&self) -> Option<&KernelSpec> {
        match self {
            ModelSpec::Kernel(k) => Some(k),
            ModelSpec::Fgn { .. } => None,
        }
    }

    pub fn covariance(&self) -> Result<CovarianceModel> {
        match self {
            ModelSpec::Kernel(k) => build_covariance(k, &QuadConfig::default()),
            ModelSpec::Fgn { alpha } => CovarianceModel::power_law(*alpha, 1.0),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_model(s)
    }
}

/// Parses `powerlaw:delta=…`, `gamma:nu=…,lambda=…`, `exp:lambda=…`,
/// `tabulated:file=…[,extrapolation=zero]` or `fgn:alpha=…`; kernels accept
/// `amplitude` and `support`.
pub fn parse_model(s: &str) -> Result<ModelSpec> {
    let mut f = FlagSpec::parse(s)?;
    if f.family == "fgn" {
        let alpha = f.req("alpha")?;
        f.finish()?;
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::validation(format!("fgn alpha={alpha} must lie in (0, 2)")));
        }
        return Ok(ModelSpec::Fgn { alpha });
    }
    let family = match f.family.as_str() {
        "powerlaw" | "power_law" => KernelFamily::PowerLawTruncated { delta: f.req("delta")? },
        "gamma" => KernelFamily::Gamma { nu: f.req("nu")?, lambda: f.req("lambda")? },
        "exp" | "exponential" => KernelFamily::ExponentialTruncated { lambda: f.req("lambda")? },
        "tabulated" => {
            let file = f
                .take("file")
                .ok_or_else(|| Error::validation("tabulated: missing parameter 'file'"))?;
            let extrapolation = match f.take("extrapolation").as_deref() {
                None | Some("error") => Extrapolation::Error,
                Some("zero") => Extrapolation::Zero,
                Some(o) => return Err(Error::validation(format!("tabulated: unknown extrapolation '{o}'"))),
            };
            let (grid, values) = read_tabulated_csv(&file)?;
            KernelFamily::Tabulated { grid, values, extrapolation }
        }
        other => return Err(Error::validation(format!("unknown kernel family '{other}'"))),
    };
    let mut spec = KernelSpec::new(family);
    if let Some(a) = f.num("amplitude")? {
        spec.amplitude = a;
    }
    spec.support_hint = f.num("support")?;
    f.finish()?;
    spec.validate()?;
    Ok(ModelSpec::Kernel(spec))
}

pub fn parse_kernel(s: &str) -> Result<KernelSpec> {
    match parse_model(s)? {
        ModelSpec::Kernel(k) => Ok(k),
        ModelSpec::Fgn { .. } => Err(Error::validation("a kernel is required here, not an fgn model")),
    }
}

/// Reads `(t, g(t))` rows; a non-numeric first row is taken as a header.
pub fn read_tabulated_csv(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::Data(format!("row {}: expected two columns", i + 1)));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(t), Ok(g)) => {
                grid.push(t);
                values.push(g);
            }
            _ if i == 0 => continue,
            _ => return Err(Error::Data(format!("row {}: cannot parse '{}', '{}'", i + 1, &rec[0], &rec[1]))),
        }
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Data("tabulated kernel times must be strictly increasing".into()));
    }
    Ok((grid, values))
}

/// Parses `const:c`, `affine:a=…,b=…`, `sine:a=…,b=…,omega=…` or
/// `expfrac:H=…,vol_of_vol=…[,mean_rev=…]`; all accept `gamma_vol`.
pub fn parse_vol(s: &str) -> Result<VolatilityModel> {
    let mut f = FlagSpec::parse(s)?;
    let mut vm = match f.family.as_str() {
        "const" | "constant" => {
            let c = match f.num("value")? {
                Some(c) => c,
                None => f.req("c")?,
            };
            VolatilityModel::constant(c)
        }
        "affine" => VolatilityModel::deterministic(DetFn::Affine { a: f.req("a")?, b: f.num("b")?.unwrap_or(0.0) }),
        "sine" => VolatilityModel::deterministic(DetFn::Sine {
            a: f.req("a")?,
            b: f.req("b")?,
            omega: f.num("omega")?.unwrap_or(1.0),
        }),
        "expfrac" | "exp_fractional" => {
            let h = match f.num("H")? {
                Some(h) => h,
                None => f.req("hurst")?,
            };
            VolatilityModel::exp_fractional(h, f.req("vol_of_vol")?, f.num("mean_rev")?.unwrap_or(0.0))
        }
        other => return Err(Error::validation(format!("unknown volatility family '{other}'"))),
    };
    if let Some(g) = f.num("gamma_vol")? {
        vm.gamma_vol = g;
    }
    f.finish()?;
    vm.validate()?;
    Ok(vm)
}

/// Parses `none`, `lipschitz:a=…,b=…[,omega=…]` (affine, or sine with `omega`),
/// `smoother:a=…,b=…` and `bss:scale=…`; the last two need `kernel`.
pub fn parse_drift(s: &str, kernel: Option<&KernelSpec>) -> Result<DriftSpec> {
    let mut f = FlagSpec::parse(s)?;
    let detfn = |f: &mut FlagSpec| -> Result<DetFn> {
        let a = f.num("a")?.unwrap_or(1.0);
        let b = f.num("b")?.unwrap_or(0.0);
        Ok(match f.num("omega")? {
            Some(omega) => DetFn::Sine { a, b, omega },
            None => DetFn::Affine { a, b },
        })
    };
    let need = || kernel.cloned().ok_or_else(|| Error::validation("this drift needs a drift kernel"));
    let d = match f.family.as_str() {
        "none" => DriftSpec::None,
        "lipschitz" => DriftSpec::Lipschitz(detfn(&mut f)?),
        "smoother" => DriftSpec::SmootherBss { kernel: need()?, a: detfn(&mut f)? },
        "bss" => DriftSpec::IndependentBss { kernel: need()?, scale: f.num("scale")?.unwrap_or(1.0) },
        other => return Err(Error::validation(format!("unknown drift family '{other}'"))),
    };
    f.finish()?;
    Ok(d)
}

/// Parses `2;1,1` into two power vectors.
pub fn parse_powers_list(s: &str) -> Result<Vec<PowerVector>> {
    let list = s
        .split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<PowerVector>>>()?;
    if list.is_empty() {
        return Err(Error::validation("no power vectors given"));
    }
    Ok(list)
}

/// Parses `key=value` lines; `#` starts a comment, blank lines are ignored.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::validation(format!("line {}: expected key=value", i + 1)))?;
        if out.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::validation(format!("line {}: duplicate key '{}'", i + 1, k.trim())));
        }
    }
    Ok(out)
}

/// A kernel together with the quadrature tolerances used for its covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    pub spec: KernelSpec,
    pub quad: QuadConfig,
}

impl KernelConfig {
    /// Multi-line `key=value` text; tabulated kernels write their table inline.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let spec = &self.spec;
        match &spec.family {
            KernelFamily::PowerLawTruncated { delta } => {
                let _ = writeln!(s, "family=powerlaw\ndelta={delta}");
            }
            KernelFamily::Gamma { nu, lambda } => {
                let _ = writeln!(s, "family=gamma\nnu={nu}\nlambda={lambda}");
            }
            KernelFamily::ExponentialTruncated { lambda } => {
                let _ = writeln!(s, "family=exp\nlambda={lambda}");
            }
            KernelFamily::Tabulated { grid, values, extrapolation } => {
                let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
                let ex = match extrapolation {
                    Extrapolation::Error => "error",
                    Extrapolation::Zero => "zero",
                };
                let _ = writeln!(s, "family=tabulated\ngrid={}\nvalues={}\nextrapolation={ex}", join(grid), join(values));
            }
        }
        let _ = writeln!(s, "amplitude={}", spec.amplitude);
        if let Some(h) = spec.support_hint {
            let _ = writeln!(s, "support={h}");
        }
        let _ = writeln!(
            s,
            "quad.abs_tol={:e}\nquad.rel_tol={:e}\nquad.max_panels={}",
            self.quad.abs_tol, self.quad.rel_tol, self.quad.max_panels
        );
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut kv = parse_key_values(text)?;
        let mut take = |k: &str| kv.remove(k);
        let num = |v: Option<String>, k: &str| -> Result<Option<f64>> {
            v.map(|v| v.parse::<f64>().map_err(|_| Error::validation(format!("'{k}' expects a number"))))
                .transpose()
        };
        let need = |v: Option<f64>, k: &str| v.ok_or_else(|| Error::validation(format!("missing key '{k}'")));
        let family = take("family").ok_or_else(|| Error::validation("missing key 'family'"))?;
        let fam = match family.as_str() {
            "powerlaw" => KernelFamily::PowerLawTruncated { delta: need(num(take("delta"), "delta")?, "delta")? },
            "gamma" => KernelFamily::Gamma {
                nu: need(num(take("nu"), "nu")?, "nu")?,
                lambda: need(num(take("lambda"), "lambda")?, "lambda")?,
            },
            "exp" => KernelFamily::ExponentialTruncated { lambda: need(num(take("lambda"), "lambda")?, "lambda")? },
            "tabulated" => {
                let list = |v: Option<String>, k: &str| -> Result<Vec<f64>> {
                    v.ok_or_else(|| Error::validation(format!("missing key '{k}'")))?
                        .split_whitespace()
                        .map(|x| x.parse::<f64>().map_err(|_| Error::validation(format!("bad number in '{k}'"))))
                        .collect()
                };
                let grid = list(take("grid"), "grid")?;
                let values = list(take("values"), "values")?;
                let extrapolation = match take("extrapolation").as_deref() {
                    None | Some("error") => Extrapolation::Error,
                    Some("zero") => Extrapolation::Zero,
                    Some(o) => return Err(Error::validation(format!("unknown extrapolation '{o}'"))),
                };
                KernelFamily::Tabulated { grid, values, extrapolation }
            }
            other => return Err(Error::validation(format!("unknown kernel family '{other}'"))),
        };
        let mut spec = KernelSpec::new(fam);
        if let Some(a) = num(take("amplitude"), "amplitude")? {
            spec.amplitude = a;
        }
        spec.support_hint = num(take("support"), "support")?;
        let mut quad = QuadConfig::default();
        if let Some(v) = num(take("quad.abs_tol"), "quad.abs_tol")? {
            quad.abs_tol = v;
        }
        if let Some(v) = num(take("quad.rel_tol"), "quad.rel_tol")? {
            quad.rel_tol = v;
        }
        if let Some(v) = num(take("quad.max_panels"), "quad.max_panels")? {
            quad.max_panels = v as usize;
        }
        if let Some(k) = kv.keys().next() {
            return Err(Error::validation(format!("unknown key '{k}'")));
        }
        spec.validate()?;
        Ok(Self { spec, quad })
    }
}

/// Wraps a closure as a labelled deterministic function.
pub fn custom_fn(label: &str, lipschitz: bool, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> DetFn {
    DetFn::Custom { label: label.into(), f: Arc::new(f), lipschitz }
}
