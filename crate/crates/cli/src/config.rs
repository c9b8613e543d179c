//! Strict JSON configs for each subcommand, `--set` overrides, and the key
//! tables printed by `--help`.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use hdinfer::bounds::ModelSet;
use hdinfer::inference::VarianceSource;
use hdinfer::lasso::LassoConfig;
use hdinfer::sim::{SolverSettings, Target};
use hdinfer::DenseMatrix;

use crate::error::{CliError, CliResult};

fn one() -> f64 {
    1.0
}

fn sqrt2() -> f64 {
    std::f64::consts::SQRT_2
}

fn default_level() -> f64 {
    0.95
}

fn yes() -> bool {
    true
}

pub fn lasso_config(solver: &SolverSettings, lambda_constant: f64) -> LassoConfig {
    LassoConfig { tol: solver.tol, max_sweeps: solver.max_sweeps, lambda_constant }
}

/// Source of `Θ̂` for the de-sparsified estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaSource {
    #[default]
    Nodewise,
    /// `Σ̂⁻¹`; needs `p < n`.
    InverseGram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub x: PathBuf,
    pub y: PathBuf,
    #[serde(default)]
    pub target: Target,
    #[serde(default)]
    pub theta: ThetaSource,
    /// Overrides `lambda_constant·σ·√(log p/n)` when set.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "sqrt2")]
    pub lambda_constant: f64,
    #[serde(default = "sqrt2")]
    pub lambda_j_constant: f64,
    #[serde(default = "one")]
    pub sigma_noise: f64,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub variance_source: VarianceSource,
    #[serde(default)]
    pub solver: SolverSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodewiseConfig {
    pub x: PathBuf,
    /// Overrides `lambda_j_constant·√(log p/n)` when set.
    #[serde(default)]
    pub lambda_j: Option<f64>,
    #[serde(default = "sqrt2")]
    pub lambda_j_constant: f64,
    #[serde(default)]
    pub solver: SolverSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GgmConfig {
    pub x: PathBuf,
    /// Zero-based entry to report with an interval.
    #[serde(default)]
    pub entry: Option<(usize, usize)>,
    #[serde(default)]
    pub lambda_j: Option<f64>,
    #[serde(default = "sqrt2")]
    pub lambda_j_constant: f64,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "yes")]
    pub include_t_hat: bool,
    #[serde(default)]
    pub solver: SolverSettings,
}

/// A matrix given inline as rows, as a CSV file, or as an identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixInput {
    Rows(DenseMatrix),
    Csv { csv: PathBuf },
    Identity { identity: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundConfig {
    Linear {
        theta0: MatrixInput,
        xi: Vec<f64>,
        n: usize,
        #[serde(default = "one")]
        sigma_noise: f64,
        /// With `beta0`, the bound's admissibility flag is filled in.
        #[serde(default)]
        beta0: Option<Vec<f64>>,
        #[serde(default)]
        model_set: Option<ModelSet>,
    },
    Fixed {
        x: PathBuf,
        j: usize,
        #[serde(default)]
        lambda_j: Option<f64>,
        #[serde(default = "sqrt2")]
        lambda_j_constant: f64,
        /// Defaults to the number of rows of `x`.
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        solver: SolverSettings,
    },
    Ggm {
        theta0: MatrixInput,
        xi1: Vec<f64>,
        xi2: Vec<f64>,
        n: usize,
    },
    Lecam {
        fisher: MatrixInput,
        g_dot: Vec<f64>,
    },
    WorstSubdirection {
        theta0: MatrixInput,
        g_dot: Vec<f64>,
    },
    Minimax {
        n: usize,
        p: usize,
        s: usize,
    },
    Compatibility {
        sigma: MatrixInput,
    },
}

pub type KeyTable = &'static [(&'static str, &'static str, &'static str)];

pub const ESTIMATE_KEYS: KeyTable = &[
    ("x", "(required)", "design CSV, one row per observation"),
    ("y", "(required)", "response CSV, one column"),
    ("target", "{\"coordinate\":0}", "{coordinate: j} | {functional: [..]}; zero-based"),
    ("theta", "nodewise", "nodewise | inverse_gram"),
    ("lambda", "null", "explicit Lasso penalty"),
    ("lambda_constant", "1.4142135623730951", "c in lambda = c*sigma*sqrt(log p/n)"),
    ("lambda_j_constant", "1.4142135623730951", "c in lambda_j = c*sqrt(log p/n)"),
    ("sigma_noise", "1", "known noise standard deviation"),
    ("level", "0.95", "confidence level"),
    ("variance_source", "plug_in_theta_diag", "plug_in_theta_diag | sandwich"),
    ("solver.tol", "1e-8", "coordinate-descent tolerance"),
    ("solver.max_sweeps", "100000", "coordinate-descent sweep cap"),
];

pub const NODEWISE_KEYS: KeyTable = &[
    ("x", "(required)", "design CSV"),
    ("lambda_j", "null", "explicit nodewise penalty"),
    ("lambda_j_constant", "1.4142135623730951", "c in lambda_j = c*sqrt(log p/n)"),
    ("solver.tol", "1e-8", "coordinate-descent tolerance"),
    ("solver.max_sweeps", "100000", "coordinate-descent sweep cap"),
];

pub const GGM_KEYS: KeyTable = &[
    ("x", "(required)", "design CSV"),
    ("entry", "null", "[i, j] zero-based entry to report with an interval"),
    ("lambda_j", "null", "explicit nodewise penalty"),
    ("lambda_j_constant", "1.4142135623730951", "c in lambda_j = c*sqrt(log p/n)"),
    ("level", "0.95", "confidence level"),
    ("include_t_hat", "true", "include the full de-sparsified matrix in the output"),
    ("solver.tol", "1e-8", "coordinate-descent tolerance"),
    ("solver.max_sweeps", "100000", "coordinate-descent sweep cap"),
];

pub const BOUND_KEYS: KeyTable = &[
    ("kind", "(required)", "linear | fixed | ggm | lecam | worst_subdirection | minimax | compatibility"),
    ("theta0", "(linear, ggm, worst_subdirection)", "matrix: [[..],..] | {csv: path} | {identity: p}"),
    ("xi", "(linear)", "functional"),
    ("n", "(linear, ggm, minimax; fixed: rows of x)", "sample size"),
    ("sigma_noise", "1 (linear)", "noise standard deviation"),
    ("beta0", "null (linear)", "base parameter for the admissibility check"),
    ("model_set", "null (linear)", "{d_n, c2_bound: 10, neighborhood_c: 1}"),
    ("x", "(fixed)", "design CSV"),
    ("j", "(fixed)", "zero-based coordinate"),
    ("lambda_j", "null (fixed)", "explicit nodewise penalty"),
    ("lambda_j_constant", "1.4142135623730951 (fixed)", "c in lambda_j = c*sqrt(log p/n)"),
    ("solver.tol", "1e-8 (fixed)", "coordinate-descent tolerance"),
    ("solver.max_sweeps", "100000 (fixed)", "coordinate-descent sweep cap"),
    ("xi1", "(ggm)", "first functional"),
    ("xi2", "(ggm)", "second functional"),
    ("fisher", "(lecam)", "information matrix"),
    ("g_dot", "(lecam, worst_subdirection)", "gradient of the target"),
    ("p", "(minimax)", "dimension"),
    ("s", "(minimax)", "sparsity"),
    ("sigma", "(compatibility)", "covariance matrix"),
];

pub const DATASET_KEYS: KeyTable = &[
    ("n", "(required)", "sample size"),
    ("p", "(required)", "dimension"),
    ("s", "(required)", "sparsity of beta0"),
    ("signal", "(required)", "l2 norm of beta0"),
    ("sigma_noise", "1", "noise standard deviation"),
    ("covariance", "{\"family\":\"identity\"}", "identity | toeplitz{rho} | equicorrelation{rho} | banded_precision{bandwidth,off_diag}"),
    ("seed", "(required)", "master seed"),
];

pub fn render_keys(table: KeyTable) -> String {
    let width = table.iter().map(|(k, _, _)| k.len()).max().unwrap_or(0);
    let mut out = String::from("Config keys (JSON; nested keys in --set dotted form):\n");
    for (key, default, help) in table {
        out.push_str(&format!("  {key:<width$}  default {default}  {help}\n"));
    }
    out
}

/// Sets `path` (dotted) in a JSON object, creating intermediate objects.
pub fn apply_override(root: &mut Value, assignment: &str) -> CliResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{assignment}`")))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Usage(format!("--set has an empty key in `{assignment}`")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let mut parts = key.split('.').peekable();
    while let Some(part) = parts.next() {
        let Value::Object(map) = node else {
            return Err(CliError::Usage(format!("--set {key}: `{part}` is not inside an object")));
        };
        if parts.peek().is_none() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        let child = map.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
        if child.is_null() {
            *child = Value::Object(Default::default());
        }
        node = child;
    }
    Ok(())
}

/// Parses `path` strictly into `T`, then applies `overrides` and parses again.
pub fn load<T>(path: &Path, overrides: &[String], aliases: &[(&str, &str)]) -> CliResult<T>
where
    T: DeserializeOwned + Serialize,
{
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead { path: path.into(), source })?;
    let parsed: T = serde_json::from_str(&text).map_err(|source| CliError::ConfigParse { path: path.into(), source })?;
    if overrides.is_empty() {
        return Ok(parsed);
    }
    let mut value = serde_json::to_value(&parsed)?;
    for o in overrides {
        let renamed = aliases
            .iter()
            .find_map(|(alias, key)| o.strip_prefix(alias).filter(|rest| rest.starts_with('=')).map(|rest| format!("{key}{rest}")));
        apply_override(&mut value, renamed.as_deref().unwrap_or(o))?;
    }
    serde_json::from_value(value).map_err(|source| CliError::ConfigParse { path: path.into(), source })
}

/// Resolves `p` against the directory holding the config file.
pub fn resolve(config_path: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}
