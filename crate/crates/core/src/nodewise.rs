//! Nodewise Lasso: regress each column on all the others and turn the fits
//! into a surrogate inverse `Θ̂` of the Gram matrix.

use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::lasso::{self, default_lambda, LassoConfig};
use crate::linalg::{dot, DenseMatrix, DenseVector};
use crate::par;

/// `τ̂ⱼ²` below this is treated as an exactly collinear column.
pub const TAU_SQ_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodewiseColumnFit {
    pub j: usize,
    /// Coefficients on the other columns, in their original order with `j` skipped.
    pub gamma_hat: DenseVector,
    pub tau_sq: f64,
    pub theta_col: DenseVector,
    pub lambda_j: f64,
    pub sparsity: usize,
    pub converged: bool,
    pub kkt_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodewiseFit {
    pub columns: Vec<NodewiseColumnFit>,
    pub theta_hat: DenseMatrix,
    /// Largest excess of `‖Σ̂Θ̂ⱼ − eⱼ‖∞` over `λⱼ/τ̂ⱼ²`, clamped at zero; `None`
    /// until checked against a Gram matrix.
    pub max_surrogate_violation: Option<f64>,
}

/// Penalty levels for the column regressions.
#[derive(Debug, Clone, PartialEq)]
pub enum NodewiseLambda {
    Shared(f64),
    PerColumn(Vec<f64>),
}

impl NodewiseLambda {
    /// `c·√(log p / n)` for every column.
    pub fn default_for(n: usize, p: usize, c: f64) -> Self {
        Self::Shared(default_lambda(n, p.max(2), c))
    }

    fn get(&self, j: usize) -> f64 {
        match self {
            Self::Shared(l) => *l,
            Self::PerColumn(ls) => ls[j],
        }
    }
}

pub fn fit_nodewise_column(x: &DenseMatrix, j: usize, lambda_j: f64, cfg: &LassoConfig) -> Result<NodewiseColumnFit> {
    let p = x.cols();
    if j >= p {
        return Err(Error::IndexOutOfRange { index: j, dim: p });
    }
    if !(lambda_j > 0.0) {
        return Err(Error::InvalidConfig(format!("nodewise lambda {lambda_j} must be positive")));
    }
    let others: Vec<&[f64]> = (0..p).filter(|&k| k != j).map(|k| x.col(k)).collect();
    let target = x.col(j);
    let fit = lasso::solve(&others, target, lambda_j, cfg)?;
    let gamma = fit.beta_hat;

    let mut r = target.to_vec();
    for (c, g) in others.iter().zip(gamma.iter()) {
        if *g != 0.0 {
            crate::linalg::axpy(-g, c, &mut r);
        }
    }
    let n = x.rows().max(1) as f64;
    let tau_sq = dot(&r, &r) / n + lambda_j * gamma.l1();
    if !(tau_sq >= TAU_SQ_FLOOR) {
        return Err(Error::DegenerateNoise { column: j, tau_sq });
    }

    let mut theta_col = DenseVector::zeros(p);
    for (k, g) in (0..p).filter(|&k| k != j).zip(gamma.iter()) {
        theta_col[k] = -g / tau_sq;
    }
    theta_col[j] = 1.0 / tau_sq;

    let kkt_violation = lasso::kkt_residual_columns(&others, target, &gamma, lambda_j);
    Ok(NodewiseColumnFit {
        j,
        sparsity: gamma.l0(),
        gamma_hat: gamma,
        tau_sq,
        theta_col,
        lambda_j,
        converged: fit.converged,
        kkt_violation,
    })
}

/// Fits the listed columns, in parallel when enabled; output follows `which`.
pub fn fit_nodewise_columns(
    x: &DenseMatrix,
    which: &[usize],
    lambdas: &NodewiseLambda,
    cfg: &LassoConfig,
    workers: usize,
) -> Result<Vec<NodewiseColumnFit>> {
    if let NodewiseLambda::PerColumn(ls) = lambdas {
        if ls.len() != x.cols() {
            return Err(dims(format!("{} nodewise penalties for {} columns", ls.len(), x.cols())));
        }
    }
    par::map_indexed(which.len(), workers, |k| fit_nodewise_column(x, which[k], lambdas.get(which[k]), cfg))
        .into_iter()
        .collect()
}

/// Stacks one column fit per index into `Θ̂`.
pub fn assemble_theta(mut columns: Vec<NodewiseColumnFit>) -> Result<NodewiseFit> {
    let p = columns.len();
    columns.sort_by_key(|c| c.j);
    let mut theta_hat = DenseMatrix::zeros(p, p);
    for (idx, c) in columns.iter().enumerate() {
        if c.j != idx {
            return Err(Error::InconsistentDimensions(format!("missing or duplicate fit for column {idx}")));
        }
        if c.theta_col.len() != p || c.gamma_hat.len() + 1 != p {
            return Err(Error::InconsistentDimensions(format!(
                "column {} fit has length {} in a {p}-column assembly",
                c.j,
                c.theta_col.len()
            )));
        }
        theta_hat.col_mut(idx).copy_from_slice(&c.theta_col);
    }
    Ok(NodewiseFit { columns, theta_hat, max_surrogate_violation: None })
}

/// Fits every column and certifies the result against `XᵀX/n`.
pub fn fit_nodewise(x: &DenseMatrix, lambdas: &NodewiseLambda, cfg: &LassoConfig, workers: usize) -> Result<NodewiseFit> {
    let all: Vec<usize> = (0..x.cols()).collect();
    let mut fit = assemble_theta(fit_nodewise_columns(x, &all, lambdas, cfg, workers)?)?;
    let violation = surrogate_inverse_violation(&crate::linalg::gram(x), &fit)?;
    fit.max_surrogate_violation = Some(violation.max(0.0));
    Ok(fit)
}

fn column_excess(sigma_hat: &DenseMatrix, theta_col: &[f64], j: usize, lambda_j: f64, tau_sq: f64) -> Result<f64> {
    let prod = sigma_hat.matvec(theta_col)?;
    let dev = prod
        .iter()
        .enumerate()
        .fold(0.0f64, |m, (k, v)| m.max((v - if k == j { 1.0 } else { 0.0 }).abs()));
    Ok(dev - lambda_j / tau_sq)
}

/// `maxⱼ ( ‖Σ̂Θ̂ⱼ − eⱼ‖∞ − λⱼ/τ̂ⱼ² )`; non-positive when every column meets the
/// bound implied by its optimality conditions.
pub fn surrogate_inverse_violation(sigma_hat: &DenseMatrix, fit: &NodewiseFit) -> Result<f64> {
    let p = fit.theta_hat.cols();
    if sigma_hat.rows() != p || sigma_hat.cols() != p || fit.columns.len() != p {
        return Err(dims(format!(
            "Gram {}x{} against a {p}-column nodewise fit",
            sigma_hat.rows(),
            sigma_hat.cols()
        )));
    }
    let mut worst = f64::NEG_INFINITY;
    for c in &fit.columns {
        let v = column_excess(sigma_hat, fit.theta_hat.col(c.j), c.j, c.lambda_j, c.tau_sq)?;
        worst = worst.max(v);
    }
    Ok(worst)
}

/// The same certificate for a single column fit.
pub fn column_surrogate_violation(sigma_hat: &DenseMatrix, fit: &NodewiseColumnFit) -> Result<f64> {
    if sigma_hat.cols() != fit.theta_col.len() {
        return Err(dims("Gram matrix and column fit disagree on p"));
    }
    column_excess(sigma_hat, &fit.theta_col, fit.j, fit.lambda_j, fit.tau_sq)
}

pub fn column_sparsity(fit: &NodewiseColumnFit) -> usize {
    fit.gamma_hat.iter().filter(|g| g.abs() > 0.0).count()
}
