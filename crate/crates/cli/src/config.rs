//! Experiment configuration: flat `key = value` files with `#` comments,
//! overridden key by key from the command line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ctmc_envelope::{ExpMethod, PricingMethod};

/// Errors that map to exit status 2: unreadable or malformed input.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Recognised keys. Underscores in keys are read as hyphens.
pub const KEYS: &[&str] = &[
    "d",
    "delta",
    "t",
    "q0",
    "q",
    "lambda-low",
    "lambda-high",
    "payoff",
    "K",
    "L",
    "method",
    "steps",
    "n",
    "k",
    "refs",
    "out",
    "seed",
    "tol",
    "trials",
    "against",
];

/// Keys a config file has to define: the state grid is never defaulted
/// for a recorded experiment.
pub const REQUIRED_FILE_KEYS: &[&str] = &["d", "delta"];

#[derive(Clone, Debug, PartialEq)]
pub enum MatrixSpec {
    /// Second-difference matrix; grid parameters default to the config grid.
    Laplacian { d: Option<usize>, delta: Option<f64> },
    /// Forward-difference matrix.
    Drift { d: Option<usize>, delta: Option<f64> },
    Zero,
    File(PathBuf),
}

impl MatrixSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(MatrixSpec::File(PathBuf::from(path)));
        }
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        let (d, delta) = match rest.as_slice() {
            [] => (None, None),
            [d, delta] => (
                Some(d.parse().map_err(|_| usage(format!("bad dimension in matrix spec {s:?}")))?),
                Some(delta.parse().map_err(|_| usage(format!("bad spacing in matrix spec {s:?}")))?),
            ),
            _ => return Err(usage(format!("matrix spec {s:?} should look like name:<d>:<delta>"))),
        };
        match name {
            "laplacian" => Ok(MatrixSpec::Laplacian { d, delta }),
            "drift" => Ok(MatrixSpec::Drift { d, delta }),
            "zero" if rest.is_empty() => Ok(MatrixSpec::Zero),
            _ => Err(usage(format!(
                "unknown matrix {s:?}; expected laplacian[:d:delta], drift[:d:delta], zero or file:<path>"
            ))),
        }
    }
}

impl fmt::Display for MatrixSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let with_grid = |f: &mut fmt::Formatter<'_>, name: &str, d: &Option<usize>, delta: &Option<f64>| match (d, delta) {
            (Some(d), Some(delta)) => write!(f, "{name}:{d}:{delta}"),
            _ => f.write_str(name),
        };
        match self {
            MatrixSpec::Laplacian { d, delta } => with_grid(f, "laplacian", d, delta),
            MatrixSpec::Drift { d, delta } => with_grid(f, "drift", d, delta),
            MatrixSpec::Zero => f.write_str("zero"),
            MatrixSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PayoffSpec {
    Butterfly,
    Bull,
    File(PathBuf),
}

impl PayoffSpec {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "butterfly" => Ok(PayoffSpec::Butterfly),
            "bull" => Ok(PayoffSpec::Bull),
            other => match other.strip_prefix("file:") {
                Some(p) => Ok(PayoffSpec::File(PathBuf::from(p))),
                None => Err(usage(format!(
                    "unknown payoff {other:?}; expected butterfly, bull or file:<path>"
                ))),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodKind {
    OdeEuler,
    OdeRk4,
    Nisio,
}

impl MethodKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "ode-euler" | "euler" => Ok(MethodKind::OdeEuler),
            "ode-rk4" | "rk4" => Ok(MethodKind::OdeRk4),
            "nisio" => Ok(MethodKind::Nisio),
            other => Err(usage(format!(
                "unknown method {other:?}; expected ode-euler, ode-rk4 or nisio"
            ))),
        }
    }
}

/// A method with its parameters, written `ode-euler:<steps>`,
/// `ode-rk4:<steps>` or `nisio:<n>:<k>` (`k = 0` for exact exponentials).
pub fn parse_method_spec(s: &str) -> Result<PricingMethod> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    let int = |v: &str| -> Result<u64> {
        v.parse().map_err(|_| usage(format!("bad integer {v:?} in method spec {s:?}")))
    };
    let method = match (MethodKind::parse(parts[0])?, &parts[1..]) {
        (MethodKind::OdeEuler, [steps]) => PricingMethod::OdeEuler { steps: int(steps)? as usize },
        (MethodKind::OdeRk4, [steps]) => PricingMethod::OdeRk4 { steps: int(steps)? as usize },
        (MethodKind::Nisio, [n, k]) => nisio_method(int(n)?, int(k)?)?,
        _ => {
            return Err(usage(format!(
                "method spec {s:?} should be ode-euler:<steps>, ode-rk4:<steps> or nisio:<n>:<k>"
            )))
        }
    };
    method.validate().map_err(|e| usage(e.to_string()))?;
    Ok(method)
}

fn nisio_method(n: u64, k: u64) -> Result<PricingMethod> {
    let n = u32::try_from(n).map_err(|_| usage(format!("refinement level {n} too large")))?;
    let exp = if k == 0 {
        ExpMethod::ScalingSquaring
    } else {
        ExpMethod::EulerProduct(k)
    };
    Ok(PricingMethod::Nisio { n, exp })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub delta: f64,
    pub t: f64,
    pub q0: MatrixSpec,
    pub q: MatrixSpec,
    pub lambda_low: f64,
    pub lambda_high: f64,
    pub payoff: PayoffSpec,
    pub strike_k: f64,
    pub strike_l: f64,
    pub method: MethodKind,
    pub steps: usize,
    pub n: u32,
    /// Euler-product factors per envelope step; 0 selects exact exponentials.
    pub k: u64,
    pub refs: Vec<f64>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub tol: f64,
    pub trials: usize,
    pub against: PricingMethod,
}

impl Default for ExperimentConfig {
    /// Drift uncertainty on `[-1, 1]` for a butterfly, 101 states on `[0, 10]`.
    fn default() -> Self {
        ExperimentConfig {
            d: 101,
            delta: 0.1,
            t: 1.0,
            q0: MatrixSpec::Laplacian { d: None, delta: None },
            q: MatrixSpec::Drift { d: None, delta: None },
            lambda_low: -1.0,
            lambda_high: 1.0,
            payoff: PayoffSpec::Butterfly,
            strike_k: 4.0,
            strike_l: 5.0,
            method: MethodKind::OdeEuler,
            steps: 1000,
            n: 10,
            k: 10,
            refs: Vec::new(),
            out: None,
            seed: 42,
            tol: 5e-2,
            trials: 1000,
            against: PricingMethod::Nisio {
                n: 10,
                exp: ExpMethod::EulerProduct(10),
            },
        }
    }
}

fn normalise_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Parses `key = value` lines. Text after `#` is a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("line {}: expected `key = value`, found {line:?}", idx + 1)))?;
        let key = normalise_key(key);
        if !KEYS.contains(&key.as_str()) {
            return Err(usage(format!("line {}: unknown key `{key}`", idx + 1)));
        }
        let value = value.trim();
        if value.is_empty() {
            return Err(usage(format!("line {}: key `{key}` has no value", idx + 1)));
        }
        if map.insert(key.clone(), value.to_string()).is_some() {
            return Err(usage(format!("line {}: key `{key}` given twice", idx + 1)));
        }
    }
    Ok(map)
}

pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let map = parse_config_text(&text).with_context(|| format!("in config {}", path.display()))?;
    for key in REQUIRED_FILE_KEYS {
        if !map.contains_key(*key) {
            return Err(usage(format!(
                "config {} is missing required key `{key}`",
                path.display()
            )));
        }
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| usage(format!("invalid value {value:?} for `{key}`")))
}

impl ExperimentConfig {
    /// Defaults, then the file's keys, then `overrides` in order.
    pub fn resolve(
        file: Option<&BTreeMap<String, String>>,
        overrides: &[(&str, String)],
    ) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        if let Some(map) = file {
            for (k, v) in map {
                cfg.set(k, v)?;
            }
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match normalise_key(key).as_str() {
            "d" => self.d = parse_value(key, value)?,
            "delta" => self.delta = parse_value(key, value)?,
            "t" => self.t = parse_value(key, value)?,
            "q0" => self.q0 = MatrixSpec::parse(value)?,
            "q" => self.q = MatrixSpec::parse(value)?,
            "lambda-low" => self.lambda_low = parse_value(key, value)?,
            "lambda-high" => self.lambda_high = parse_value(key, value)?,
            "payoff" => self.payoff = PayoffSpec::parse(value)?,
            "K" => self.strike_k = parse_value(key, value)?,
            "L" => self.strike_l = parse_value(key, value)?,
            "method" => self.method = MethodKind::parse(value)?,
            "steps" => self.steps = parse_value(key, value)?,
            "n" => self.n = parse_value(key, value)?,
            "k" => self.k = parse_value(key, value)?,
            "refs" => {
                self.refs = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_value::<f64>("refs", s))
                    .collect::<Result<_>>()?
            }
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "seed" => self.seed = parse_value(key, value)?,
            "tol" => self.tol = parse_value(key, value)?,
            "trials" => self.trials = parse_value(key, value)?,
            "against" => self.against = parse_method_spec(value)?,
            other => return Err(usage(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    fn check(&self) -> Result<()> {
        let finite = [
            ("delta", self.delta),
            ("t", self.t),
            ("lambda-low", self.lambda_low),
            ("lambda-high", self.lambda_high),
            ("K", self.strike_k),
            ("L", self.strike_l),
            ("tol", self.tol),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(usage(format!("`{key}` must be finite")));
            }
        }
        if self.refs.iter().any(|v| !v.is_finite()) {
            return Err(usage("`refs` must be finite"));
        }
        if self.d < 2 {
            return Err(usage("`d` must be at least 2"));
        }
        if self.delta <= 0.0 {
            return Err(usage("`delta` must be positive"));
        }
        if self.t < 0.0 {
            return Err(usage("`t` must be nonnegative"));
        }
        if self.tol < 0.0 {
            return Err(usage("`tol` must be nonnegative"));
        }
        if self.trials == 0 {
            return Err(usage("`trials` must be positive"));
        }
        self.pricing_method().validate().map_err(|e| usage(e.to_string()))?;
        Ok(())
    }

    pub fn pricing_method(&self) -> PricingMethod {
        match self.method {
            MethodKind::OdeEuler => PricingMethod::OdeEuler { steps: self.steps },
            MethodKind::OdeRk4 => PricingMethod::OdeRk4 { steps: self.steps },
            MethodKind::Nisio => PricingMethod::Nisio {
                n: self.n,
                exp: if self.k == 0 {
                    ExpMethod::ScalingSquaring
                } else {
                    ExpMethod::EulerProduct(self.k)
                },
            },
        }
    }
}
