use serde::{Deserialize, Serialize};

use crate::datagen::CovarianceFamily;
use crate::error::{Error, Result};
use crate::inference::VarianceSource;
use crate::lasso::LassoConfig;
use crate::linalg::DenseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    LinearRandomDesign,
    /// One design drawn at the master seed and held fixed across replicates.
    LinearFixedDesign,
    Ggm,
}

impl ModelKind {
    pub fn is_linear(self) -> bool {
        !matches!(self, Self::Ggm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    LinearInference,
    BiasRate,
    OracleInequality,
    LocalPerturbation,
    Ggm,
}

/// What the replicates estimate. Indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Coordinate(usize),
    Functional(Vec<f64>),
    PrecisionEntry(usize, usize),
}

impl Default for Target {
    fn default() -> Self {
        Self::Coordinate(0)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationDirection {
    /// `Θ₀ξ/√(ξᵀΘ₀ξ)`, trimmed to the sparsity budget when `d_n` is set.
    #[default]
    Worst,
    Zero,
    Explicit(Vec<f64>),
}

/// Data are generated under `β₀ + scale·h/√n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    #[serde(default)]
    pub direction: PerturbationDirection,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

fn sqrt2() -> f64 {
    std::f64::consts::SQRT_2
}

fn default_replications() -> usize {
    100
}

fn default_level() -> f64 {
    0.95
}

fn yes() -> bool {
    true
}

fn default_c2_bound() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    /// Defaults to `ggm` for the graphical model and `linear_inference` otherwise.
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub s: usize,
    #[serde(default = "default_replications", alias = "R")]
    pub replications: usize,
    #[serde(default = "one")]
    pub signal: f64,
    #[serde(default = "one")]
    pub sigma_noise: f64,
    #[serde(default)]
    pub covariance: CovarianceFamily,
    /// Lasso penalty is `lambda_constant·σ·√(log p / n)`.
    #[serde(default = "sqrt2")]
    pub lambda_constant: f64,
    /// Nodewise penalty is `lambda_j_constant·√(log p / n)`.
    #[serde(default = "sqrt2")]
    pub lambda_j_constant: f64,
    #[serde(default)]
    pub target: Target,
    /// Move a support entry of `β₀` onto the target coordinate so the Lasso
    /// shrinkage bias is visible there.
    #[serde(default = "yes")]
    pub target_in_support: bool,
    #[serde(default)]
    pub perturbation: Option<Perturbation>,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub variance_source: VarianceSource,
    #[serde(default)]
    pub master_seed: u64,
    /// `0` uses every core, `1` runs sequentially.
    #[serde(default)]
    pub parallel_workers: usize,
    /// Sample sizes for `bias_rate`; empty means just `n`.
    #[serde(default)]
    pub n_grid: Vec<usize>,
    /// Sparsity levels for `oracle_inequality`; empty means just `s`.
    #[serde(default)]
    pub s_grid: Vec<usize>,
    /// Sparsity budget of the model set; unset means `s` plus the support of
    /// the perturbation.
    #[serde(default)]
    pub d_n: Option<usize>,
    #[serde(default = "default_c2_bound")]
    pub c2_bound: f64,
    #[serde(default = "one")]
    pub neighborhood_c: f64,
    #[serde(default)]
    pub solver: SolverSettings,
}

/// Coordinate-descent stopping rules shared by the Lasso and nodewise fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = LassoConfig::default();
        Self { tol: d.tol, max_sweeps: d.max_sweeps }
    }
}

/// Every accepted key with its default and meaning, in `--set` dotted form.
pub const CONFIG_KEYS: &[(&str, &str, &str)] = &[
    ("model", "(required)", "linear_random_design | linear_fixed_design | ggm"),
    ("experiment", "by model", "linear_inference | bias_rate | oracle_inequality | local_perturbation | ggm"),
    ("n", "(required)", "sample size"),
    ("p", "(required)", "dimension"),
    ("s", "0", "sparsity of beta0"),
    ("replications", "100", "Monte Carlo replicates (alias R)"),
    ("signal", "1", "l2 norm of beta0; each nonzero is signal/sqrt(s)"),
    ("sigma_noise", "1", "noise standard deviation, taken as known"),
    ("covariance", "{\"family\":\"identity\"}", "identity | toeplitz{rho} | equicorrelation{rho} | banded_precision{bandwidth,off_diag}"),
    ("lambda_constant", "1.4142135623730951", "Lasso penalty constant c in c*sigma*sqrt(log p/n)"),
    ("lambda_j_constant", "1.4142135623730951", "nodewise penalty constant c in c*sqrt(log p/n)"),
    ("target", "{\"coordinate\":0}", "{coordinate: j} | {functional: [..]} | {precision_entry: [i,j]}; zero-based"),
    ("target_in_support", "true", "force the target coordinate into the support of beta0"),
    ("perturbation", "null", "{direction: worst | zero | {explicit: [..]}, scale: 1}"),
    ("level", "0.95", "confidence level"),
    ("variance_source", "plug_in_theta_diag", "plug_in_theta_diag | sandwich | oracle"),
    ("master_seed", "0", "seed all replicate streams derive from"),
    ("parallel_workers", "0", "0 = all cores, 1 = sequential, N = N threads"),
    ("n_grid", "[]", "sample sizes for bias_rate"),
    ("s_grid", "[]", "sparsity levels for oracle_inequality"),
    ("d_n", "null", "sparsity budget of the model set"),
    ("c2_bound", "10", "l2 budget C of the model set"),
    ("neighborhood_c", "1", "perturbation radius constant c"),
    ("solver.tol", "1e-8", "coordinate-descent tolerance"),
    ("solver.max_sweeps", "100000", "coordinate-descent sweep cap"),
];

impl ExperimentConfig {
    pub fn lasso_config(&self) -> LassoConfig {
        LassoConfig { tol: self.solver.tol, max_sweeps: self.solver.max_sweeps, lambda_constant: self.lambda_constant }
    }

    pub fn kind(&self) -> ExperimentKind {
        self.experiment.unwrap_or(match self.model {
            ModelKind::Ggm => ExperimentKind::Ggm,
            _ => ExperimentKind::LinearInference,
        })
    }

    /// `(n, s)` for each group of replicates.
    pub fn groups(&self) -> Vec<(usize, usize)> {
        match self.kind() {
            ExperimentKind::BiasRate if !self.n_grid.is_empty() => self.n_grid.iter().map(|&n| (n, self.s)).collect(),
            ExperimentKind::OracleInequality if !self.s_grid.is_empty() => {
                self.s_grid.iter().map(|&s| (self.n, s)).collect()
            }
            _ => vec![(self.n, self.s)],
        }
    }

    /// `ξ` for a linear target.
    pub fn xi(&self) -> Result<DenseVector> {
        match &self.target {
            Target::Coordinate(j) => Ok(DenseVector::unit(self.p, *j)),
            Target::Functional(v) => DenseVector::new(v.clone()),
            Target::PrecisionEntry(..) => Err(Error::InvalidConfig("precision_entry targets need the ggm model".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.p < 2 {
            return bad(format!("p = {} must be at least 2", self.p));
        }
        for (n, s) in self.groups() {
            if n < 2 {
                return bad(format!("n = {n} must be at least 2"));
            }
            if s > self.p {
                return Err(Error::SparsityExceedsDim { s, p: self.p });
            }
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidLevel(self.level));
        }
        for (name, v) in [
            ("sigma_noise", self.sigma_noise),
            ("lambda_constant", self.lambda_constant),
            ("lambda_j_constant", self.lambda_j_constant),
            ("c2_bound", self.c2_bound),
            ("neighborhood_c", self.neighborhood_c),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if !self.signal.is_finite() {
            return bad("signal must be finite".into());
        }
        self.lasso_config().validate()?;

        let kind = self.kind();
        if (kind == ExperimentKind::Ggm) != (self.model == ModelKind::Ggm) {
            return bad(format!("experiment {kind:?} does not match model {:?}", self.model));
        }
        match (&self.target, self.model.is_linear()) {
            (Target::Coordinate(j), true) if *j >= self.p => Err(Error::IndexOutOfRange { index: *j, dim: self.p }),
            (Target::Functional(xi), true) if xi.len() != self.p => {
                bad(format!("functional has length {}, expected p = {}", xi.len(), self.p))
            }
            (Target::Functional(xi), true) if xi.iter().all(|v| *v == 0.0) => Err(Error::ZeroGradient),
            (Target::Coordinate(_) | Target::Functional(_), true) => Ok(()),
            (Target::PrecisionEntry(i, j), false) => match (*i).max(*j) {
                m if m >= self.p => Err(Error::IndexOutOfRange { index: m, dim: self.p }),
                _ => Ok(()),
            },
            (_, true) => bad("precision_entry targets need the ggm model".into()),
            (_, false) => bad("the ggm model needs a precision_entry target".into()),
        }?;
        if let Some(Perturbation { direction: PerturbationDirection::Explicit(h), scale }) = &self.perturbation {
            if h.len() != self.p || !scale.is_finite() {
                return bad(format!("explicit perturbation has length {}, expected p = {}", h.len(), self.p));
            }
        }
        if kind == ExperimentKind::LocalPerturbation && self.perturbation.is_none() {
            return bad("local_perturbation needs a perturbation".into());
        }
        if self.perturbation.is_some() && !self.model.is_linear() {
            return bad("perturbations apply to linear models only".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    const MINIMAL: &str = r#"{"model": "linear_random_design", "n": 100, "p": 50, "s": 2, "R": 10, "master_seed": 7}"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        assert_eq!(cfg.replications, 10);
        assert_eq!(cfg.kind(), ExperimentKind::LinearInference);
        assert_eq!(cfg.target, Target::Coordinate(0));
        assert_eq!(cfg.level, 0.95);
        assert_eq!(cfg.covariance, CovarianceFamily::Identity);
        assert_eq!(cfg.lasso_config(), LassoConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn strict_parsing() {
        let dup = r#"{"model": "ggm", "n": 100, "n": 200, "p": 5}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(dup).unwrap_err().to_string().contains("duplicate"));
        let typo = r#"{"model": "ggm", "n": 100, "p": 5, "replicatons": 3}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(typo).unwrap_err().to_string().contains("unknown field"));
        let both = r#"{"model": "ggm", "n": 100, "p": 5, "R": 3, "replications": 4}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(both).is_err());
    }

    #[test]
    fn key_table_matches_the_schema() {
        let cfg: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        let value = serde_json::to_value(&cfg).unwrap();
        let mut keys = BTreeSet::new();
        for (k, v) in value.as_object().unwrap() {
            match (k.as_str(), v) {
                ("solver", serde_json::Value::Object(inner)) => {
                    keys.extend(inner.keys().map(|ik| format!("solver.{ik}")));
                }
                _ => {
                    keys.insert(k.clone());
                }
            }
        }
        let listed: BTreeSet<String> = CONFIG_KEYS.iter().map(|(k, _, _)| k.to_string()).collect();
        assert_eq!(keys, listed);
    }

    #[test]
    fn validation_catches_inconsistent_targets() {
        let mut cfg: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        cfg.target = Target::PrecisionEntry(0, 1);
        assert!(cfg.validate().is_err());
        cfg.model = ModelKind::Ggm;
        cfg.validate().unwrap();
        cfg.target = Target::PrecisionEntry(0, 50);
        assert!(matches!(cfg.validate(), Err(Error::IndexOutOfRange { .. })));
        cfg.target = Target::Coordinate(0);
        assert!(cfg.validate().is_err());

        let mut cfg: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        cfg.replications = 0;
        assert!(cfg.validate().is_err());
        cfg.replications = 1;
        cfg.experiment = Some(ExperimentKind::LocalPerturbation);
        assert!(cfg.validate().is_err());
        cfg.perturbation = Some(Perturbation { direction: PerturbationDirection::Worst, scale: 1.0 });
        cfg.validate().unwrap();
        cfg.s = 51;
        assert!(matches!(cfg.validate(), Err(Error::SparsityExceedsDim { .. })));
    }

    #[test]
    fn grids_define_groups() {
        let mut cfg: ExperimentConfig = serde_json::from_str(MINIMAL).unwrap();
        cfg.n_grid = vec![200, 800];
        assert_eq!(cfg.groups(), vec![(100, 2)]);
        cfg.experiment = Some(ExperimentKind::BiasRate);
        assert_eq!(cfg.groups(), vec![(200, 2), (800, 2)]);
        cfg.experiment = Some(ExperimentKind::OracleInequality);
        cfg.s_grid = vec![2, 4, 8];
        assert_eq!(cfg.groups(), vec![(100, 2), (100, 4), (100, 8)]);
    }
}
