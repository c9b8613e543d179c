use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::stats::{mean, median, normality_diagnostics, sample_variance, MIN_NORMALITY_SAMPLES};
use crate::error::Result;

/// Monte Carlo evaluates the claims at finitely many `(n, β₀)` points only.
pub const SCOPE_NOTE: &str = "Monte Carlo estimates at the listed (n, beta0) points only; \
     bounds are leading-order terms and no uniformity over parameter sets is claimed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoRecord {
    /// `ξᵀβ̂` of the plain Lasso.
    pub target_estimate: f64,
    pub l1_error: f64,
    pub support: usize,
    pub converged: bool,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceRecord {
    pub truth: f64,
    pub estimate: f64,
    pub variance_estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub covered: bool,
    /// `(estimate − truth)/std_error`.
    pub z: f64,
    /// Largest `‖γ̂ⱼ‖₀` among the nodewise columns used.
    pub nodewise_sparsity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub group: usize,
    pub replicate: usize,
    pub n: usize,
    pub s: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lasso: Option<LassoRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub inference: Option<InferenceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub group: usize,
    pub replicate: usize,
    pub seed: u64,
    pub error: String,
}

/// Sparsity index `s·log p/√n`; the debiasing theory needs it small.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub sparsity_index: f64,
    pub violated: bool,
}

impl Regime {
    pub fn new(n: usize, p: usize, s: usize) -> Self {
        let sparsity_index = s as f64 * (p as f64).ln() / (n as f64).sqrt();
        Self { sparsity_index, violated: sparsity_index > 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LassoAggregates {
    pub mean_target_estimate: f64,
    pub mean_bias: f64,
    pub root_n_mean_bias: f64,
    pub mean_l1_error: f64,
    /// `(mean ‖β̂ − β₀‖₁²)^{1/2}`.
    pub rms_l1_error: f64,
    /// `None` when `s = 0`.
    pub l1_error_over_s_lambda: Option<f64>,
    pub rms_l1_error_over_s_lambda: Option<f64>,
    pub median_support: f64,
    pub fraction_zero_fits: f64,
    pub fraction_converged: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InferenceAggregates {
    pub truth: f64,
    pub mean_estimate: f64,
    pub mean_bias: f64,
    pub bias_mc_se: Option<f64>,
    pub root_n_mean_bias: f64,
    pub root_n_bias_mc_se: Option<f64>,
    pub n_empirical_variance: Option<f64>,
    pub n_mean_variance_estimate: f64,
    pub bound_per_sample: Option<f64>,
    /// `n·Var / bound_per_sample`.
    pub variance_ratio: Option<f64>,
    pub coverage: f64,
    /// `√(level·(1 − level)/R)`.
    pub coverage_mc_se: f64,
    pub mean_z: f64,
    pub variance_z: Option<f64>,
    pub ks: Option<f64>,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAggregates {
    pub group: usize,
    pub n: usize,
    pub s: usize,
    /// Lasso penalty; absent for the graphical model.
    pub lambda: Option<f64>,
    /// Nodewise penalty; absent when no nodewise fit is made.
    pub lambda_j: Option<f64>,
    pub replicates_ok: usize,
    pub failures: usize,
    pub regime: Regime,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub perturbation: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lasso: Option<LassoAggregates>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub inference: Option<InferenceAggregates>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trend {
    BiasRate {
        n: Vec<usize>,
        root_n_abs_bias: Vec<f64>,
        root_n_bias_mc_se: Vec<f64>,
        /// `b_{k+1} ≤ b_k + 2·√(se_k² + se_{k+1}²)` at every step.
        nonincreasing_within_2se: bool,
        lasso_root_n_abs_bias: Vec<f64>,
        /// Plain-Lasso over de-sparsified `√n·|bias|`.
        lasso_to_debiased_ratio: Vec<f64>,
    },
    OracleInequality {
        s: Vec<usize>,
        s_lambda: Vec<f64>,
        mean_l1_error: Vec<f64>,
        rms_l1_error: Vec<f64>,
        /// max/min of `mean ℓ1 error/(sλ)` over `s > 0`.
        ratio_spread: Option<f64>,
        rms_ratio_spread: Option<f64>,
        /// Least-squares slope through the origin of mean error on `sλ`.
        slope: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    /// Effective config. `parallel_workers` is echoed as 0 because the worker
    /// count cannot change any result; the count used is in [`MonteCarloReport::timing`].
    pub config: ExperimentConfig,
    pub experiment: ExperimentKind,
    pub scope: String,
    pub aggregates: Vec<GroupAggregates>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trend: Option<Trend>,
    pub failures: Vec<FailureRecord>,
    pub records: Vec<ReplicateRecord>,
    /// Kept out of the JSON so reports are byte-stable; see [`MonteCarloReport::timing`].
    #[serde(skip)]
    pub wall_ms: f64,
    #[serde(skip)]
    pub workers: usize,
}

impl MonteCarloReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Non-deterministic run metadata, written separately from the report.
    pub fn timing(&self) -> serde_json::Value {
        serde_json::json!({
            "wall_ms": self.wall_ms,
            "workers": self.workers,
            "parallel": crate::par::parallel_enabled(),
        })
    }

    pub fn group_records(&self, group: usize) -> impl Iterator<Item = &ReplicateRecord> {
        self.records.iter().filter(move |r| r.group == group)
    }

    /// One CSV row per successful replicate.
    pub fn write_records_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "group",
            "replicate",
            "n",
            "s",
            "seed",
            "lasso_target_estimate",
            "l1_error",
            "lasso_support",
            "lasso_converged",
            "truth",
            "estimate",
            "variance_estimate",
            "ci_lo",
            "ci_hi",
            "covered",
            "z",
            "nodewise_sparsity",
        ])?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for r in &self.records {
            let l = r.lasso.as_ref();
            let i = r.inference.as_ref();
            w.write_record([
                r.group.to_string(),
                r.replicate.to_string(),
                r.n.to_string(),
                r.s.to_string(),
                r.seed.to_string(),
                opt(l.map(|l| format!("{:e}", l.target_estimate))),
                opt(l.map(|l| format!("{:e}", l.l1_error))),
                opt(l.map(|l| l.support.to_string())),
                opt(l.map(|l| l.converged.to_string())),
                opt(i.map(|i| format!("{:e}", i.truth))),
                opt(i.map(|i| format!("{:e}", i.estimate))),
                opt(i.map(|i| format!("{:e}", i.variance_estimate))),
                opt(i.map(|i| format!("{:e}", i.ci_lo))),
                opt(i.map(|i| format!("{:e}", i.ci_hi))),
                opt(i.map(|i| i.covered.to_string())),
                opt(i.map(|i| format!("{:e}", i.z))),
                opt(i.map(|i| i.nodewise_sparsity.to_string())),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Lasso summaries for one group; `truth` is the target value `ξᵀβ₀`.
pub fn aggregate_lasso(records: &[&LassoRecord], n: usize, s: usize, lambda: f64, truth: f64) -> LassoAggregates {
    if records.is_empty() {
        return LassoAggregates::default();
    }
    let targets: Vec<f64> = records.iter().map(|r| r.target_estimate).collect();
    let errors: Vec<f64> = records.iter().map(|r| r.l1_error).collect();
    let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let supports: Vec<f64> = records.iter().map(|r| r.support as f64).collect();
    let mean_target_estimate = mean(&targets);
    let mean_bias = mean_target_estimate - truth;
    let mean_l1_error = mean(&errors);
    let rms_l1_error = mean(&sq).sqrt();
    let s_lambda = s as f64 * lambda;
    let r = records.len() as f64;
    LassoAggregates {
        mean_target_estimate,
        mean_bias,
        root_n_mean_bias: (n as f64).sqrt() * mean_bias,
        mean_l1_error,
        rms_l1_error,
        l1_error_over_s_lambda: (s > 0).then(|| mean_l1_error / s_lambda),
        rms_l1_error_over_s_lambda: (s > 0).then(|| rms_l1_error / s_lambda),
        median_support: median(&supports),
        fraction_zero_fits: records.iter().filter(|r| r.support == 0).count() as f64 / r,
        fraction_converged: records.iter().filter(|r| r.converged).count() as f64 / r,
    }
}

pub fn aggregate_inference(
    records: &[&InferenceRecord],
    n: usize,
    bound_per_sample: Option<f64>,
    level: f64,
) -> InferenceAggregates {
    if records.is_empty() {
        return InferenceAggregates { bound_per_sample, ..Default::default() };
    }
    let r = records.len() as f64;
    let root_n = (n as f64).sqrt();
    let estimates: Vec<f64> = records.iter().map(|r| r.estimate).collect();
    let zs: Vec<f64> = records.iter().map(|r| r.z).collect();
    let variances: Vec<f64> = records.iter().map(|r| r.variance_estimate).collect();
    let truth = records[0].truth;
    let mean_estimate = mean(&estimates);
    let mean_bias = mean_estimate - truth;
    let var = sample_variance(&estimates);
    let bias_mc_se = var.map(|v| (v / r).sqrt());
    let n_empirical_variance = var.map(|v| n as f64 * v);
    let normality = (records.len() >= MIN_NORMALITY_SAMPLES).then(|| normality_diagnostics(&zs).ok()).flatten();
    InferenceAggregates {
        truth,
        mean_estimate,
        mean_bias,
        bias_mc_se,
        root_n_mean_bias: root_n * mean_bias,
        root_n_bias_mc_se: bias_mc_se.map(|se| root_n * se),
        n_empirical_variance,
        n_mean_variance_estimate: n as f64 * mean(&variances),
        bound_per_sample,
        variance_ratio: match (n_empirical_variance, bound_per_sample) {
            (Some(v), Some(b)) if b > 0.0 => Some(v / b),
            _ => None,
        },
        coverage: records.iter().filter(|r| r.covered).count() as f64 / r,
        coverage_mc_se: (level * (1.0 - level) / r).sqrt(),
        mean_z: mean(&zs),
        variance_z: sample_variance(&zs),
        ks: normality.map(|d| d.ks),
        skewness: normality.and_then(|d| finite(d.skewness)),
        excess_kurtosis: normality.and_then(|d| finite(d.excess_kurtosis)),
    }
}

pub fn bias_rate_trend(groups: &[GroupAggregates]) -> Trend {
    let inf: Vec<InferenceAggregates> = groups.iter().map(|g| g.inference.clone().unwrap_or_default()).collect();
    let b: Vec<f64> = inf.iter().map(|a| a.root_n_mean_bias.abs()).collect();
    let se: Vec<f64> = inf.iter().map(|a| a.root_n_bias_mc_se.unwrap_or(0.0)).collect();
    let lasso: Vec<f64> =
        groups.iter().map(|g| g.lasso.as_ref().map_or(0.0, |l| l.root_n_mean_bias.abs())).collect();
    let nonincreasing = (1..b.len()).all(|k| b[k] <= b[k - 1] + 2.0 * (se[k - 1].powi(2) + se[k].powi(2)).sqrt());
    Trend::BiasRate {
        n: groups.iter().map(|g| g.n).collect(),
        lasso_to_debiased_ratio: lasso.iter().zip(&b).map(|(l, d)| l / d).collect(),
        root_n_abs_bias: b,
        root_n_bias_mc_se: se,
        nonincreasing_within_2se: nonincreasing,
        lasso_root_n_abs_bias: lasso,
    }
}

fn spread(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = xs.collect();
    if v.is_empty() {
        return None;
    }
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    Some(max / min)
}

pub fn oracle_trend(groups: &[GroupAggregates]) -> Trend {
    let lasso: Vec<LassoAggregates> = groups.iter().map(|g| g.lasso.clone().unwrap_or_default()).collect();
    let s_lambda: Vec<f64> = groups.iter().map(|g| g.s as f64 * g.lambda.unwrap_or(0.0)).collect();
    let mean_l1_error: Vec<f64> = lasso.iter().map(|l| l.mean_l1_error).collect();
    let sxx: f64 = s_lambda.iter().map(|x| x * x).sum();
    let sxy: f64 = s_lambda.iter().zip(&mean_l1_error).map(|(x, y)| x * y).sum();
    Trend::OracleInequality {
        s: groups.iter().map(|g| g.s).collect(),
        ratio_spread: spread(lasso.iter().filter_map(|l| l.l1_error_over_s_lambda)),
        rms_ratio_spread: spread(lasso.iter().filter_map(|l| l.rms_l1_error_over_s_lambda)),
        slope: (sxx > 0.0).then(|| sxy / sxx),
        rms_l1_error: lasso.iter().map(|l| l.rms_l1_error).collect(),
        s_lambda,
        mean_l1_error,
    }
}
