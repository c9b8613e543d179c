use std::borrow::Cow;
use std::time::Instant;

use super::config::{ExperimentConfig, ExperimentKind, ModelKind, PerturbationDirection, Target};
use super::report::{
    aggregate_inference, aggregate_lasso, bias_rate_trend, oracle_trend, FailureRecord, GroupAggregates,
    InferenceRecord, LassoRecord, MonteCarloReport, Regime, ReplicateRecord, SCOPE_NOTE,
};
use crate::bounds::{cr_bound_linear, ggm_bound, neighborhood_membership, normalized_direction, Direction, EfficiencyBound, ModelSet};
use crate::datagen::{
    build_covariance, make_sparse_beta, sample_mvn_with_factor, simulate_linear, Covariance, CovarianceSpec, STREAM_BETA,
    STREAM_DESIGN, STREAM_NOISE,
};
use crate::error::{Error, Result};
use crate::inference::{functional_estimate_with, precision_entry_from_columns, DebiasedEstimate, VarianceSource};
use crate::lasso::{default_lambda, fit_lasso, LassoConfig};
use crate::linalg::{cholesky, dot, quadratic_form, DenseMatrix, DenseVector};
use crate::nodewise::{fit_nodewise_columns, NodewiseColumnFit, NodewiseLambda};
use crate::par;
use crate::rng::derive_seed;

/// Child streams of the master seed; groups start above the datagen streams.
const GROUP_STREAM_BASE: u64 = 16;
/// Child streams of a group seed.
const GROUP_DESIGN: u64 = 0;
const GROUP_REPLICATES: u64 = 1;

pub fn run_linear_inference_experiment(cfg: &ExperimentConfig) -> Result<MonteCarloReport> {
    run_as(cfg, ExperimentKind::LinearInference)
}

/// `√n·|bias|` of the de-sparsified and plain-Lasso estimates over `n_grid`.
pub fn run_bias_rate_experiment(cfg: &ExperimentConfig) -> Result<MonteCarloReport> {
    run_as(cfg, ExperimentKind::BiasRate)
}

/// Lasso `ℓ1` error against `sλ` over `s_grid`; no nodewise fits.
pub fn run_oracle_inequality_experiment(cfg: &ExperimentConfig) -> Result<MonteCarloReport> {
    run_as(cfg, ExperimentKind::OracleInequality)
}

/// Linear inference with data drawn under `β₀ + scale·h/√n`.
pub fn run_local_perturbation_experiment(cfg: &ExperimentConfig) -> Result<MonteCarloReport> {
    run_as(cfg, ExperimentKind::LocalPerturbation)
}

pub fn run_ggm_experiment(cfg: &ExperimentConfig) -> Result<MonteCarloReport> {
    run_as(cfg, ExperimentKind::Ggm)
}

/// Dispatches on [`ExperimentConfig::kind`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MonteCarloReport> {
    run_as(cfg, cfg.kind())
}

fn run_as(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<MonteCarloReport> {
    let mut cfg = cfg.clone();
    cfg.experiment = Some(kind);
    cfg.validate()?;
    let start = Instant::now();

    let cov = build_covariance(&CovarianceSpec { family: cfg.covariance, dim: cfg.p })?;
    let factor = cholesky(&cov.sigma)?;
    let mut aggregates = Vec::new();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (g, (n, s)) in cfg.groups().into_iter().enumerate() {
        let group_seed = derive_seed(cfg.master_seed, GROUP_STREAM_BASE + g as u64);
        let outcome = if cfg.model.is_linear() {
            let group = LinearGroup::new(&cfg, &cov, &factor, g, n, s, group_seed)?;
            group.run()
        } else {
            GgmGroup::new(&cfg, &cov, &factor, g, n, group_seed)?.run()
        };
        aggregates.push(outcome.aggregates);
        records.extend(outcome.records);
        failures.extend(outcome.failures);
    }

    let workers = std::mem::take(&mut cfg.parallel_workers);
    let trend = match kind {
        ExperimentKind::BiasRate => Some(bias_rate_trend(&aggregates)),
        ExperimentKind::OracleInequality => Some(oracle_trend(&aggregates)),
        _ => None,
    };
    Ok(MonteCarloReport {
        config: cfg,
        experiment: kind,
        scope: SCOPE_NOTE.to_string(),
        aggregates,
        trend,
        failures,
        records,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        workers,
    })
}

struct GroupOutcome {
    aggregates: GroupAggregates,
    records: Vec<ReplicateRecord>,
    failures: Vec<FailureRecord>,
}

/// Runs `replicate` over every index and splits successes from failures.
fn collect<F>(workers: usize, count: usize, group: usize, seed_base: u64, replicate: F) -> (Vec<ReplicateRecord>, Vec<FailureRecord>)
where
    F: Fn(usize, u64) -> Result<ReplicateRecord> + Sync + Send,
{
    let results = par::map_indexed(count, workers, |r| {
        let seed = derive_seed(seed_base, r as u64);
        replicate(r, seed).map_err(|e| FailureRecord { group, replicate: r, seed, error: e.to_string() })
    });
    let mut ok = Vec::with_capacity(count);
    let mut failed = Vec::new();
    for res in results {
        match res {
            Ok(rec) => ok.push(rec),
            Err(f) => failed.push(f),
        }
    }
    (ok, failed)
}

/// `β₀` shared by every replicate, with the target coordinate moved into the
/// support when requested.
fn truth_beta(cfg: &ExperimentConfig, s: usize, xi: &[f64]) -> Result<DenseVector> {
    let mut beta = make_sparse_beta(cfg.p, s, cfg.signal, derive_seed(cfg.master_seed, STREAM_BETA))?;
    if cfg.target_in_support && s > 0 {
        let anchor = xi.iter().enumerate().fold(0, |best, (k, v)| if v.abs() > xi[best].abs() { k } else { best });
        if beta[anchor] == 0.0 {
            let first = beta.iter().position(|v| *v != 0.0).unwrap_or(anchor);
            beta[anchor] = beta[first];
            beta[first] = 0.0;
        }
    }
    Ok(beta)
}

/// Keeps every entry of `h` on the support of `β₀` plus the largest
/// `budget` entries elsewhere.
fn trim_to_budget(h: &mut [f64], beta0: &[f64], budget: usize) -> bool {
    let mut off: Vec<usize> = (0..h.len()).filter(|&k| beta0[k] == 0.0 && h[k] != 0.0).collect();
    if off.len() <= budget {
        return false;
    }
    off.sort_by(|&a, &b| h[b].abs().total_cmp(&h[a].abs()).then(a.cmp(&b)));
    for &k in &off[budget..] {
        h[k] = 0.0;
    }
    true
}

/// The perturbation `scale·h` and a report summary.
fn perturbation(
    cfg: &ExperimentConfig,
    cov: &Covariance,
    xi: &[f64],
    beta0: &[f64],
    n: usize,
) -> Result<Option<(DenseVector, serde_json::Value)>> {
    let Some(spec) = &cfg.perturbation else { return Ok(None) };
    let l0 = beta0.iter().filter(|v| **v != 0.0).count();
    let mut h = match &spec.direction {
        PerturbationDirection::Zero => DenseVector::zeros(cfg.p),
        PerturbationDirection::Explicit(v) => DenseVector::new(v.clone())?,
        PerturbationDirection::Worst => {
            let mut h = normalized_direction(&cov.theta, xi)?;
            if let Some(d_n) = cfg.d_n {
                if trim_to_budget(&mut h, beta0, d_n.saturating_sub(l0)) {
                    let norm = quadratic_form(&h, &cov.sigma, &h)?.sqrt();
                    if norm > 0.0 {
                        h.iter_mut().for_each(|v| *v /= norm);
                    }
                }
            }
            h
        }
    };
    h.iter_mut().for_each(|v| *v *= spec.scale);
    let set = ModelSet {
        d_n: cfg.d_n.unwrap_or(l0 + h.l0()),
        c2_bound: cfg.c2_bound,
        neighborhood_c: cfg.neighborhood_c,
    };
    let admissible = neighborhood_membership(beta0, &h, &set, n)?;
    let summary = serde_json::json!({
        "direction": Direction::Vector(h.clone()).summary(),
        "sigma_norm": quadratic_form(&h, &cov.sigma, &h)?.sqrt(),
        "support": h.l0(),
        "model_set": set,
        "admissible": admissible,
    });
    Ok(Some((h, summary)))
}

struct FixedDesign {
    x: DenseMatrix,
    columns: Vec<NodewiseColumnFit>,
}

struct LinearGroup<'a> {
    cfg: &'a ExperimentConfig,
    cov: &'a Covariance,
    factor: &'a DenseMatrix,
    lasso_cfg: LassoConfig,
    group: usize,
    n: usize,
    s: usize,
    seed: u64,
    xi: DenseVector,
    xi_support: Vec<usize>,
    beta: DenseVector,
    truth: f64,
    lambda: f64,
    lambda_j: f64,
    inference: bool,
    fixed: Option<FixedDesign>,
    bound: Option<EfficiencyBound>,
    perturbation: Option<serde_json::Value>,
}

impl<'a> LinearGroup<'a> {
    fn new(
        cfg: &'a ExperimentConfig,
        cov: &'a Covariance,
        factor: &'a DenseMatrix,
        group: usize,
        n: usize,
        s: usize,
        seed: u64,
    ) -> Result<Self> {
        let xi = cfg.xi()?;
        let xi_support: Vec<usize> = (0..cfg.p).filter(|&k| xi[k] != 0.0).collect();
        let beta0 = truth_beta(cfg, s, &xi)?;
        let (beta, perturbation) = match perturbation(cfg, cov, &xi, &beta0, n)? {
            Some((h, summary)) => {
                let root_n = (n as f64).sqrt();
                let moved: Vec<f64> = beta0.iter().zip(h.iter()).map(|(b, d)| b + d / root_n).collect();
                (DenseVector::new(moved)?, Some(summary))
            }
            None => (beta0.clone(), None),
        };
        let truth = dot(&xi, &beta);
        let lambda = default_lambda(n, cfg.p, cfg.lambda_constant) * cfg.sigma_noise;
        let lambda_j = default_lambda(n, cfg.p, cfg.lambda_j_constant);
        let lasso_cfg = cfg.lasso_config();
        let inference = cfg.kind() != ExperimentKind::OracleInequality;

        let fixed = if cfg.model == ModelKind::LinearFixedDesign {
            let x = sample_mvn_with_factor(n, factor, derive_seed(seed, GROUP_DESIGN));
            let columns = if inference {
                fit_nodewise_columns(&x, &xi_support, &NodewiseLambda::Shared(lambda_j), &lasso_cfg, cfg.parallel_workers)?
            } else {
                Vec::new()
            };
            Some(FixedDesign { x, columns })
        } else {
            None
        };

        let bound = if !inference {
            None
        } else if let Some(fd) = &fixed {
            let theta_xi = combine(&fd.columns, &xi, cfg.p);
            let q = dot(&xi, &theta_xi);
            let scale = q.sqrt();
            let direction = theta_xi.iter().map(|v| if scale > 0.0 { v / scale } else { 0.0 }).collect::<Vec<_>>();
            let per_sample = cfg.sigma_noise * cfg.sigma_noise * q;
            Some(EfficiencyBound {
                bound_per_sample: per_sample,
                bound: per_sample / n as f64,
                direction: Direction::Vector(DenseVector::from(direction)),
                admissible: None,
            })
        } else {
            Some(cr_bound_linear(&cov.theta, &xi, n, cfg.sigma_noise)?)
        };
        let bound = match bound {
            Some(mut b) => {
                let d_n = cfg.d_n.unwrap_or(beta0.l0() + match &b.direction {
                    Direction::Vector(h) => h.l0(),
                    Direction::Matrix(_) => 0,
                });
                let set = ModelSet { d_n, c2_bound: cfg.c2_bound, neighborhood_c: cfg.neighborhood_c };
                b.check_admissible(&beta0, &set, n)?;
                Some(b)
            }
            None => None,
        };

        Ok(Self {
            cfg,
            cov,
            factor,
            lasso_cfg,
            group,
            n,
            s,
            seed,
            xi,
            xi_support,
            beta,
            truth,
            lambda,
            lambda_j,
            inference,
            fixed,
            bound,
            perturbation,
        })
    }

    fn replicate(&self, r: usize, seed: u64) -> Result<ReplicateRecord> {
        let cfg = self.cfg;
        let x: Cow<DenseMatrix> = match &self.fixed {
            Some(fd) => Cow::Borrowed(&fd.x),
            None => Cow::Owned(sample_mvn_with_factor(self.n, self.factor, derive_seed(seed, STREAM_DESIGN))),
        };
        let y = simulate_linear(&x, &self.beta, cfg.sigma_noise, derive_seed(seed, STREAM_NOISE))?;
        let fit = fit_lasso(&x, &y, self.lambda, &self.lasso_cfg)?;
        let lasso = LassoRecord {
            target_estimate: dot(&self.xi, &fit.beta_hat),
            l1_error: fit.beta_hat.iter().zip(self.beta.iter()).map(|(a, b)| (a - b).abs()).sum(),
            support: fit.support_size(),
            converged: fit.converged,
            sweeps: fit.sweeps_used,
        };

        let inference = if self.inference {
            let fresh;
            let columns = match &self.fixed {
                Some(fd) => &fd.columns,
                None => {
                    let lambdas = NodewiseLambda::Shared(self.lambda_j);
                    fresh = fit_nodewise_columns(&x, &self.xi_support, &lambdas, &self.lasso_cfg, 1)?;
                    &fresh
                }
            };
            let theta_xi = combine(columns, &self.xi, cfg.p);
            let estimate = functional_estimate_with(&self.xi, &fit.beta_hat, &theta_xi, &x, &y)?;
            let q = match cfg.variance_source {
                VarianceSource::PlugInThetaDiag => dot(&self.xi, &theta_xi),
                VarianceSource::Sandwich => {
                    let v = x.matvec(&theta_xi)?;
                    dot(&v, &v) / self.n as f64
                }
                VarianceSource::Oracle => quadratic_form(&self.xi, &self.cov.theta, &self.xi)?,
            };
            let variance = cfg.sigma_noise * cfg.sigma_noise * q / self.n as f64;
            let est = DebiasedEstimate::new(estimate, variance, cfg.level, cfg.variance_source)?;
            Some(inference_record(&est, self.truth, columns)?)
        } else {
            None
        };
        Ok(ReplicateRecord { group: self.group, replicate: r, n: self.n, s: self.s, seed, lasso: Some(lasso), inference })
    }

    fn run(&self) -> GroupOutcome {
        let base = derive_seed(self.seed, GROUP_REPLICATES);
        let (records, failures) =
            collect(self.cfg.parallel_workers, self.cfg.replications, self.group, base, |r, seed| self.replicate(r, seed));
        let lasso: Vec<&LassoRecord> = records.iter().filter_map(|r| r.lasso.as_ref()).collect();
        let inf: Vec<&InferenceRecord> = records.iter().filter_map(|r| r.inference.as_ref()).collect();
        let aggregates = GroupAggregates {
            group: self.group,
            n: self.n,
            s: self.s,
            lambda: Some(self.lambda),
            lambda_j: self.inference.then_some(self.lambda_j),
            replicates_ok: records.len(),
            failures: failures.len(),
            regime: Regime::new(self.n, self.cfg.p, self.s),
            bound: self.bound.as_ref().map(EfficiencyBound::to_report),
            perturbation: self.perturbation.clone(),
            lasso: Some(aggregate_lasso(&lasso, self.n, self.s, self.lambda, self.truth)),
            inference: self.inference.then(|| {
                aggregate_inference(&inf, self.n, self.bound.as_ref().map(|b| b.bound_per_sample), self.cfg.level)
            }),
        };
        GroupOutcome { aggregates, records, failures }
    }
}

/// `Θ̂ξ` from the nodewise columns on the support of `ξ`.
fn combine(columns: &[NodewiseColumnFit], xi: &[f64], p: usize) -> Vec<f64> {
    let mut out = vec![0.0; p];
    for c in columns {
        crate::linalg::axpy(xi[c.j], &c.theta_col, &mut out);
    }
    out
}

fn inference_record(est: &DebiasedEstimate, truth: f64, columns: &[NodewiseColumnFit]) -> Result<InferenceRecord> {
    if !(est.std_error > 0.0) {
        return Err(Error::NegativeVariance(est.variance));
    }
    Ok(InferenceRecord {
        truth,
        estimate: est.value,
        variance_estimate: est.variance,
        ci_lo: est.ci_lo,
        ci_hi: est.ci_hi,
        covered: est.covers(truth),
        z: (est.value - truth) / est.std_error,
        nodewise_sparsity: columns.iter().map(|c| c.sparsity).max().unwrap_or(0),
    })
}

struct GgmGroup<'a> {
    cfg: &'a ExperimentConfig,
    factor: &'a DenseMatrix,
    lasso_cfg: LassoConfig,
    group: usize,
    n: usize,
    seed: u64,
    i: usize,
    j: usize,
    truth: f64,
    lambda_j: f64,
    bound: EfficiencyBound,
    row_sparsity: usize,
}

impl<'a> GgmGroup<'a> {
    fn new(
        cfg: &'a ExperimentConfig,
        cov: &'a Covariance,
        factor: &'a DenseMatrix,
        group: usize,
        n: usize,
        seed: u64,
    ) -> Result<Self> {
        let Target::PrecisionEntry(i, j) = cfg.target else {
            return Err(Error::InvalidConfig("the ggm model needs a precision_entry target".into()));
        };
        let p = cfg.p;
        let bound = ggm_bound(&cov.theta, &DenseVector::unit(p, i), &DenseVector::unit(p, j), n)?;
        let row_sparsity =
            (0..p).map(|c| (0..p).filter(|&k| k != c && cov.theta[(k, c)] != 0.0).count()).max().unwrap_or(0);
        Ok(Self {
            cfg,
            factor,
            lasso_cfg: cfg.lasso_config(),
            group,
            n,
            seed,
            i,
            j,
            truth: cov.theta[(i, j)],
            lambda_j: default_lambda(n, p, cfg.lambda_j_constant),
            bound,
            row_sparsity,
        })
    }

    fn replicate(&self, r: usize, seed: u64) -> Result<ReplicateRecord> {
        let x = sample_mvn_with_factor(self.n, self.factor, derive_seed(seed, STREAM_DESIGN));
        let which: Vec<usize> = if self.i == self.j { vec![self.i] } else { vec![self.i, self.j] };
        let columns = fit_nodewise_columns(&x, &which, &NodewiseLambda::Shared(self.lambda_j), &self.lasso_cfg, 1)?;
        let ci = &columns[0].theta_col;
        let cj = &columns[columns.len() - 1].theta_col;
        let est = precision_entry_from_columns(ci, cj, self.i, self.j, &x, self.cfg.level)?;
        Ok(ReplicateRecord {
            group: self.group,
            replicate: r,
            n: self.n,
            s: self.cfg.s,
            seed,
            lasso: None,
            inference: Some(inference_record(&est, self.truth, &columns)?),
        })
    }

    fn run(&self) -> GroupOutcome {
        let base = derive_seed(self.seed, GROUP_REPLICATES);
        let (records, failures) =
            collect(self.cfg.parallel_workers, self.cfg.replications, self.group, base, |r, seed| self.replicate(r, seed));
        let inf: Vec<&InferenceRecord> = records.iter().filter_map(|r| r.inference.as_ref()).collect();
        let aggregates = GroupAggregates {
            group: self.group,
            n: self.n,
            s: self.cfg.s,
            lambda: None,
            lambda_j: Some(self.lambda_j),
            replicates_ok: records.len(),
            failures: failures.len(),
            regime: Regime::new(self.n, self.cfg.p, self.row_sparsity),
            bound: Some(self.bound.to_report()),
            perturbation: None,
            lasso: None,
            inference: Some(aggregate_inference(&inf, self.n, Some(self.bound.bound_per_sample), self.cfg.level)),
        };
        GroupOutcome { aggregates, records, failures }
    }
}
