//! Run configuration: TOML parsing, validation, and snapshots.
//!
//! Configs are structured text (TOML). Unknown keys are hard errors, range
//! violations name the offending key, and the validated config with all
//! defaults filled serializes to a snapshot that re-parses to an identical
//! `RunConfig`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainSpec, Interval, Minorization, Start, TargetDensity};
use crate::experiments::DriftParams;
use crate::kernel::Kernel;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config key `{key}`: {message}")]
    Range { key: String, message: String },
    #[error("experiment `{experiment}` requires key `{key}`")]
    Missing { experiment: String, key: String },
    #[error("experiment `{experiment}` does not accept key `{key}`")]
    Extraneous { experiment: String, key: String },
}

fn range(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Range { key: key.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Lln,
    Tail,
    Counterexample,
    Spectrum,
    Ustat,
    Tau,
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ExperimentKind::Lln => "lln",
            ExperimentKind::Tail => "tail",
            ExperimentKind::Counterexample => "counterexample",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Ustat => "ustat",
            ExperimentKind::Tau => "tau",
        };
        f.write_str(s)
    }
}

/// Where the chain starts: a point of (0,1) or the string `"stationary"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartConfig {
    Point(f64),
    Named(String),
}

impl Default for StartConfig {
    fn default() -> Self {
        StartConfig::Named("stationary".to_string())
    }
}

impl StartConfig {
    pub fn to_start(&self) -> Result<Start, ConfigError> {
        match self {
            StartConfig::Point(x) => {
                if *x > 0.0 && *x < 1.0 {
                    Ok(Start::Point(*x))
                } else {
                    Err(range("start", format!("start point must lie in (0,1), got {x}")))
                }
            }
            StartConfig::Named(s) if s == "stationary" => Ok(Start::Stationary),
            StartConfig::Named(s) => {
                Err(range("start", format!("expected a point in (0,1) or \"stationary\", got \"{s}\"")))
            }
        }
    }
}

/// Kernel section: a family name plus that family's numeric parameters.
///
/// Deserialized flat (not as a tagged enum) so unknown keys are hard errors
/// and a parameter from the wrong family is rejected by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// `cosine` | `gaussian` | `polynomial` | `diagonal_power` | `constant`
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl KernelConfig {
    pub fn cosine(lambdas: Vec<f64>) -> Self {
        Self {
            family: "cosine".into(),
            lambdas: Some(lambdas),
            lambda_csv: None,
            width: None,
            offset: None,
            degree: None,
            value: None,
        }
    }

    fn forbid_outside_family(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        let fields: [(&str, bool); 6] = [
            ("lambdas", self.lambdas.is_some()),
            ("lambda_csv", self.lambda_csv.is_some()),
            ("width", self.width.is_some()),
            ("offset", self.offset.is_some()),
            ("degree", self.degree.is_some()),
            ("value", self.value.is_some()),
        ];
        for (name, present) in fields {
            if present && !allowed.contains(&name) {
                return Err(range(
                    &format!("kernel.{name}"),
                    format!("not a parameter of family `{}`", self.family),
                ));
            }
        }
        Ok(())
    }

    /// Builds the kernel; `base_dir` anchors relative CSV paths.
    pub fn build(&self, base_dir: &Path) -> Result<Kernel, ConfigError> {
        let kernel = match self.family.as_str() {
            "cosine" => {
                self.forbid_outside_family(&["lambdas", "lambda_csv"])?;
                let lambdas = match (&self.lambdas, &self.lambda_csv) {
                    (Some(l), None) => l.clone(),
                    (None, Some(csv)) => load_lambda_csv(&base_dir.join(csv))?,
                    (Some(_), Some(_)) => {
                        return Err(range("kernel.lambdas", "give either lambdas or lambda_csv, not both"))
                    }
                    (None, None) => {
                        return Err(range("kernel.lambdas", "cosine kernel needs lambdas or lambda_csv"))
                    }
                };
                if lambdas.is_empty() {
                    return Err(range("kernel.lambdas", "needs at least one eigenvalue"));
                }
                if lambdas.iter().any(|l| !l.is_finite()) {
                    return Err(range("kernel.lambdas", "eigenvalues must be finite"));
                }
                if lambdas.windows(2).any(|w| w[1].abs() > w[0].abs()) {
                    return Err(range("kernel.lambdas", "eigenvalues must be nonincreasing in absolute value"));
                }
                Kernel::CosineRank { lambdas }
            }
            "gaussian" => {
                self.forbid_outside_family(&["width"])?;
                let width = self.width.ok_or_else(|| range("kernel.width", "required for family `gaussian`"))?;
                if !(width > 0.0) {
                    return Err(range("kernel.width", format!("must be positive, got {width}")));
                }
                Kernel::Gaussian { width }
            }
            "polynomial" => {
                self.forbid_outside_family(&["offset", "degree"])?;
                let offset = self.offset.ok_or_else(|| range("kernel.offset", "required for family `polynomial`"))?;
                let degree = self.degree.ok_or_else(|| range("kernel.degree", "required for family `polynomial`"))?;
                if !(offset >= 0.0) {
                    return Err(range("kernel.offset", format!("must be nonnegative, got {offset}")));
                }
                if degree == 0 {
                    return Err(range("kernel.degree", "must be at least 1"));
                }
                Kernel::Polynomial { offset, degree }
            }
            "diagonal_power" => {
                self.forbid_outside_family(&[])?;
                Kernel::DiagonalPower
            }
            "constant" => {
                self.forbid_outside_family(&["value"])?;
                let value = self.value.ok_or_else(|| range("kernel.value", "required for family `constant`"))?;
                if !value.is_finite() {
                    return Err(range("kernel.value", "must be finite"));
                }
                Kernel::Constant { value }
            }
            other => {
                return Err(range(
                    "kernel.family",
                    format!("unknown family `{other}` (cosine, gaussian, polynomial, diagonal_power, constant)"),
                ))
            }
        };
        Ok(kernel)
    }
}

/// `index,lambda` rows, ordered by index.
fn load_lambda_csv(path: &Path) -> Result<Vec<f64>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let mut lines = text.lines();
    match lines.next() {
        Some("index,lambda") => {}
        _ => return Err(range("kernel.lambda_csv", "first row must be the header `index,lambda`")),
    }
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let mut parse = || -> Option<(usize, f64)> {
            let idx = parts.next()?.trim().parse().ok()?;
            let lam = crate::report::parse_f64(parts.next()?.trim())?;
            Some((idx, lam))
        };
        let row = parse().ok_or_else(|| {
            range("kernel.lambda_csv", format!("row {} is not `index,lambda`", lineno + 2))
        })?;
        rows.push(row);
    }
    rows.sort_by_key(|r| r.0);
    Ok(rows.into_iter().map(|r| r.1).collect())
}

/// Unnormalized target density for the Metropolis–Hastings chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// `uniform` | `beta`
    pub density: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

impl TargetConfig {
    fn build(&self) -> Result<TargetDensity, ConfigError> {
        match self.density.as_str() {
            "uniform" => {
                if self.a.is_some() || self.b.is_some() {
                    return Err(range("chain.target.a", "uniform density takes no parameters"));
                }
                Ok(TargetDensity::Uniform)
            }
            "beta" => {
                let a = self.a.ok_or_else(|| range("chain.target.a", "required for density `beta`"))?;
                let b = self.b.ok_or_else(|| range("chain.target.b", "required for density `beta`"))?;
                if !(a >= 1.0) {
                    return Err(range("chain.target.a", format!("must be >= 1, got {a}")));
                }
                if !(b >= 1.0) {
                    return Err(range("chain.target.b", format!("must be >= 1, got {b}")));
                }
                Ok(TargetDensity::Beta { a, b })
            }
            other => Err(range("chain.target.density", format!("unknown density `{other}` (uniform, beta)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinorizationConfig {
    /// The small set C as `[lo, hi]`.
    pub small_set: [f64; 2],
    pub m: u32,
    pub delta: f64,
    /// ν = Uniform(lo, hi) as `[lo, hi]`.
    pub nu: [f64; 2],
}

impl MinorizationConfig {
    fn build(&self) -> Result<Minorization, ConfigError> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(range("minorization.delta", format!("must lie in (0,1], got {}", self.delta)));
        }
        if self.m != 1 {
            return Err(range("minorization.m", "only m = 1 splittings are supported"));
        }
        if !(self.small_set[0] < self.small_set[1]) {
            return Err(range("minorization.small_set", "needs lo < hi"));
        }
        if !(self.nu[0] < self.nu[1]) {
            return Err(range("minorization.nu", "needs lo < hi"));
        }
        Ok(Minorization {
            small_set: Interval { lo: self.small_set[0], hi: self.small_set[1] },
            m: self.m,
            delta: self.delta,
            nu: Interval { lo: self.nu[0], hi: self.nu[1] },
        })
    }
}

/// Chain section: a kind plus that kind's parameters, deserialized flat so
/// unknown or out-of-family keys fail loudly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    /// `iid_uniform` | `refresh` | `rwmh`
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposal_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minorization: Option<MinorizationConfig>,
}

impl ChainConfig {
    pub fn named(kind: &str) -> Self {
        Self { kind: kind.into(), proposal_width: None, target: None, minorization: None }
    }

    pub fn build(&self) -> Result<ChainSpec, ConfigError> {
        match self.kind.as_str() {
            "iid_uniform" | "refresh" => {
                if self.proposal_width.is_some() || self.target.is_some() || self.minorization.is_some() {
                    return Err(range(
                        "chain.proposal_width",
                        format!("`{}` chains take no parameters", self.kind),
                    ));
                }
                Ok(if self.kind == "refresh" { ChainSpec::Refresh } else { ChainSpec::IidUniform })
            }
            "rwmh" => {
                let proposal_width = self
                    .proposal_width
                    .ok_or_else(|| range("chain.proposal_width", "required for kind `rwmh`"))?;
                if !(proposal_width > 0.0 && proposal_width <= 1.0) {
                    return Err(range(
                        "chain.proposal_width",
                        format!("must lie in (0,1], got {proposal_width}"),
                    ));
                }
                let target = self
                    .target
                    .as_ref()
                    .ok_or_else(|| range("chain.target", "required for kind `rwmh`"))?;
                let minorization = self
                    .minorization
                    .as_ref()
                    .ok_or_else(|| range("chain.minorization", "required for kind `rwmh`"))?;
                Ok(ChainSpec::Rwmh {
                    target: target.build()?,
                    proposal_width,
                    minorization: minorization.build()?,
                })
            }
            other => Err(range("chain.kind", format!("unknown kind `{other}` (iid_uniform, refresh, rwmh)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    pub lambda: f64,
    pub b: f64,
    pub k_sup: f64,
    pub delta: f64,
    pub v_start: f64,
    pub start_in_c: bool,
}

impl DriftConfig {
    pub fn build(&self) -> Result<DriftParams, ConfigError> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(range("drift.lambda", format!("must lie in (0,1), got {}", self.lambda)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(range("drift.delta", format!("must lie in (0,1), got {}", self.delta)));
        }
        if !(self.b >= 0.0) {
            return Err(range("drift.b", format!("must be nonnegative, got {}", self.b)));
        }
        if !(self.k_sup >= 1.0) {
            return Err(range("drift.k_sup", format!("must be >= 1, got {}", self.k_sup)));
        }
        if !(self.v_start >= 1.0) {
            return Err(range("drift.v_start", format!("must be >= 1, got {}", self.v_start)));
        }
        Ok(DriftParams {
            lambda: self.lambda,
            b: self.b,
            k_sup: self.k_sup,
            delta: self.delta,
            v_start: self.v_start,
            start_in_c: self.start_in_c,
        })
    }
}

pub fn default_replicates() -> usize {
    50
}

fn default_output_dir() -> String {
    "runs".to_string()
}

fn default_quadrature_order() -> usize {
    crate::experiments::DEFAULT_QUAD_ORDER
}

fn default_permutations() -> usize {
    2000
}

/// One experiment run, fully specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub master_seed: u64,
    /// Number of replicates (defaults to 50).
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_grid: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub t_grid: Vec<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default = "default_quadrature_order")]
    pub quadrature_order: usize,
    /// Label shuffles for the tail permutation test.
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default)]
    pub start: StartConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftConfig>,
}

impl RunConfig {
    fn require_kernel(&self) -> Result<&KernelConfig, ConfigError> {
        self.kernel.as_ref().ok_or(ConfigError::Missing {
            experiment: self.experiment.to_string(),
            key: "kernel".to_string(),
        })
    }

    fn require_chain(&self) -> Result<&ChainConfig, ConfigError> {
        self.chain.as_ref().ok_or(ConfigError::Missing {
            experiment: self.experiment.to_string(),
            key: "chain".to_string(),
        })
    }

    fn forbid(&self, present: bool, key: &str) -> Result<(), ConfigError> {
        if present {
            Err(ConfigError::Extraneous { experiment: self.experiment.to_string(), key: key.to_string() })
        } else {
            Ok(())
        }
    }

    fn check_n_grid(&self, exact_len: Option<usize>) -> Result<(), ConfigError> {
        if self.n_grid.is_empty() {
            return Err(range("n_grid", "must be nonempty"));
        }
        if self.n_grid[0] == 0 {
            return Err(range("n_grid", "sizes must be positive"));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(range("n_grid", "sizes must be strictly increasing"));
        }
        if let Some(len) = exact_len {
            if self.n_grid.len() != len {
                return Err(range("n_grid", format!("expected exactly {len} entry(ies)")));
            }
        }
        Ok(())
    }

    /// Validates every field against the chosen experiment; the offending key
    /// is named in the error.
    pub fn validate(&self, base_dir: &Path) -> Result<(), ConfigError> {
        if self.replicates == 0 {
            return Err(range("replicates", "must be at least 1"));
        }
        if self.quadrature_order == 0 {
            return Err(range("quadrature_order", "must be at least 1"));
        }
        self.start.to_start()?;
        if let Some(k) = &self.kernel {
            k.build(base_dir)?;
        }
        if let Some(c) = &self.chain {
            c.build()?;
        }
        if let Some(d) = &self.drift {
            d.build()?;
        }
        match self.experiment {
            ExperimentKind::Lln => {
                self.require_kernel()?;
                self.require_chain()?;
                self.check_n_grid(None)?;
                self.forbid(self.drift.is_some(), "drift")?;
            }
            ExperimentKind::Tail => {
                self.require_kernel()?;
                self.require_chain()?;
                self.check_n_grid(None)?;
                if self.t_grid.is_empty() {
                    return Err(range("t_grid", "must be nonempty"));
                }
                if self.t_grid.iter().any(|t| !(*t >= 0.0)) {
                    return Err(range("t_grid", "thresholds must be nonnegative"));
                }
                self.forbid(self.drift.is_some(), "drift")?;
            }
            ExperimentKind::Counterexample => {
                self.check_n_grid(None)?;
                self.forbid(self.kernel.is_some(), "kernel")?;
                self.forbid(self.chain.is_some(), "chain")?;
                self.forbid(self.drift.is_some(), "drift")?;
            }
            ExperimentKind::Spectrum => {
                self.require_kernel()?;
                self.require_chain()?;
                self.check_n_grid(Some(1))?;
                self.forbid(self.drift.is_some(), "drift")?;
            }
            ExperimentKind::Ustat => {
                self.require_kernel()?;
                self.require_chain()?;
                self.check_n_grid(None)?;
                self.forbid(self.drift.is_some(), "drift")?;
            }
            ExperimentKind::Tau => {
                if self.drift.is_none() {
                    return Err(ConfigError::Missing {
                        experiment: self.experiment.to_string(),
                        key: "drift".to_string(),
                    });
                }
                self.forbid(self.kernel.is_some(), "kernel")?;
                self.forbid(self.chain.is_some(), "chain")?;
            }
        }
        Ok(())
    }

    /// The snapshot text: parse it back and you get an identical config.
    pub fn snapshot(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Parses and validates a config from TOML text; `base_dir` anchors relative
/// paths referenced by the config.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    config.validate(base_dir)?;
    Ok(config)
}

/// Reads, parses, and validates a config file.
pub fn parse_config_file(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base)
}
