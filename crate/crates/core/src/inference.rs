//! De-sparsified estimators and their normal confidence intervals.
//!
//! Linear model: `b̂ = β̂ + Θ̂ᵀXᵀ(Y − Xβ̂)/n` and `b̂_ξ = ξᵀb̂`.
//! Graphical model: `T̂ = Θ̂ + Θ̂ᵀ − Θ̂ᵀΣ̂Θ̂`.

use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::linalg::{dot, quadratic_form, DenseMatrix, DenseVector};
use crate::rng::normal_quantile;

/// Quadratic forms this far below zero are reported instead of clamped.
const NEGATIVE_VARIANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VarianceSource {
    /// `σ²·ξᵀΘ̂ξ/n`
    #[default]
    PlugInThetaDiag,
    /// `σ²·(Θ̂ξ)ᵀΣ̂(Θ̂ξ)/n`
    Sandwich,
    /// `σ²·ξᵀΘ₀ξ/n` with the true precision matrix; for simulations only.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebiasedEstimate {
    pub value: f64,
    pub variance: f64,
    pub std_error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub level: f64,
    pub variance_source: VarianceSource,
    /// `‖ξ‖₁` of the functional, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_l1: Option<f64>,
}

impl DebiasedEstimate {
    pub fn new(value: f64, variance: f64, level: f64, variance_source: VarianceSource) -> Result<Self> {
        let (ci_lo, ci_hi) = confidence_interval(value, variance, level)?;
        Ok(Self { value, variance, std_error: variance.sqrt(), ci_lo, ci_hi, level, variance_source, xi_l1: None })
    }

    pub fn covers(&self, truth: f64) -> bool {
        self.ci_lo <= truth && truth <= self.ci_hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionEstimate {
    pub t_hat: DenseMatrix,
    pub entry: Option<(usize, usize, DebiasedEstimate)>,
}

fn residual(x: &DenseMatrix, y: &[f64], beta_hat: &[f64]) -> Result<Vec<f64>> {
    if x.rows() != y.len() || x.cols() != beta_hat.len() {
        return Err(dims(format!(
            "design {}x{}, response {}, coefficients {}",
            x.rows(),
            x.cols(),
            y.len(),
            beta_hat.len()
        )));
    }
    let fit = x.matvec(beta_hat)?;
    Ok(y.iter().zip(fit.iter()).map(|(a, b)| a - b).collect())
}

/// `XᵀR/n` for the Lasso residual `R = Y − Xβ̂`.
pub fn score(x: &DenseMatrix, y: &[f64], beta_hat: &[f64]) -> Result<DenseVector> {
    let r = residual(x, y, beta_hat)?;
    let n = x.rows().max(1) as f64;
    let mut g = x.tr_matvec(&r)?;
    g.iter_mut().for_each(|v| *v /= n);
    Ok(g)
}

pub fn desparsified_lasso(
    beta_hat: &[f64],
    theta_hat: &DenseMatrix,
    x: &DenseMatrix,
    y: &[f64],
) -> Result<DenseVector> {
    let p = beta_hat.len();
    if theta_hat.rows() != p || theta_hat.cols() != p {
        return Err(dims(format!("Θ̂ is {}x{} for p = {p}", theta_hat.rows(), theta_hat.cols())));
    }
    let g = score(x, y, beta_hat)?;
    let correction = theta_hat.tr_matvec(&g)?;
    Ok(DenseVector::from(beta_hat.iter().zip(correction.iter()).map(|(b, c)| b + c).collect::<Vec<_>>()))
}

/// `ξᵀb̂`.
pub fn functional_estimate(
    xi: &[f64],
    beta_hat: &[f64],
    theta_hat: &DenseMatrix,
    x: &DenseMatrix,
    y: &[f64],
) -> Result<f64> {
    if xi.len() != theta_hat.cols() {
        return Err(dims(format!("ξ has length {}, Θ̂ is {}x{}", xi.len(), theta_hat.rows(), theta_hat.cols())));
    }
    functional_estimate_with(xi, beta_hat, &theta_hat.matvec(xi)?, x, y)
}

/// `ξᵀb̂` given only the combination `Θ̂ξ`, so callers need just the columns
/// of `Θ̂` on the support of `ξ`.
pub fn functional_estimate_with(
    xi: &[f64],
    beta_hat: &[f64],
    theta_xi: &[f64],
    x: &DenseMatrix,
    y: &[f64],
) -> Result<f64> {
    if xi.len() != beta_hat.len() || theta_xi.len() != beta_hat.len() {
        return Err(dims("ξ, β̂ and Θ̂ξ must share a length"));
    }
    let g = score(x, y, beta_hat)?;
    Ok(dot(xi, beta_hat) + dot(theta_xi, &g))
}

fn checked_variance(q: f64) -> Result<f64> {
    if q < -NEGATIVE_VARIANCE_TOL || !q.is_finite() {
        return Err(Error::NegativeVariance(q));
    }
    Ok(q.max(0.0))
}

/// Variance of `b̂_ξ` under the selected characterization.
///
/// `theta` is `Θ̂` for the plug-in and sandwich forms and `Θ₀` for the oracle.
pub fn variance_estimate_linear(
    xi: &[f64],
    theta: &DenseMatrix,
    sigma_hat: &DenseMatrix,
    n: usize,
    sigma_noise: f64,
    source: VarianceSource,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidConfig("variance needs n >= 1".into()));
    }
    let scale = sigma_noise * sigma_noise / n as f64;
    let q = match source {
        VarianceSource::PlugInThetaDiag | VarianceSource::Oracle => quadratic_form(xi, theta, xi)?,
        VarianceSource::Sandwich => {
            let direction = theta.matvec(xi)?;
            quadratic_form(&direction, sigma_hat, &direction)?
        }
    };
    Ok(checked_variance(q)? * scale)
}

/// Two-sided standard normal critical value for coverage `level`.
pub fn critical_value(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidLevel(level));
    }
    Ok(normal_quantile(0.5 * (1.0 + level)))
}

pub fn confidence_interval(value: f64, variance: f64, level: f64) -> Result<(f64, f64)> {
    let z = critical_value(level)?;
    let variance = checked_variance(variance)?;
    let half = z * variance.sqrt();
    Ok((value - half, value + half))
}

/// `T̂ = Θ̂ + Θ̂ᵀ − Θ̂ᵀΣ̂Θ̂`, entry `(i, j)` being `Θ̂ᵢⱼ + Θ̂ⱼᵢ − Θ̂ᵢᵀΣ̂Θ̂ⱼ` with
/// `Θ̂ᵢ` the `i`-th column. The upper triangle is mirrored so the result is
/// exactly symmetric.
pub fn desparsified_precision(theta_hat: &DenseMatrix, sigma_hat: &DenseMatrix) -> Result<DenseMatrix> {
    let p = theta_hat.rows();
    if !theta_hat.is_square() || sigma_hat.rows() != p || sigma_hat.cols() != p {
        return Err(dims(format!(
            "Θ̂ {}x{} with Σ̂ {}x{}",
            theta_hat.rows(),
            theta_hat.cols(),
            sigma_hat.rows(),
            sigma_hat.cols()
        )));
    }
    let s_theta = sigma_hat.matmul(theta_hat)?;
    let mut t = DenseMatrix::zeros(p, p);
    for j in 0..p {
        for i in 0..=j {
            let v = theta_hat[(i, j)] + theta_hat[(j, i)] - dot(theta_hat.col(i), s_theta.col(j));
            t[(i, j)] = v;
            t[(j, i)] = v;
        }
    }
    Ok(t)
}

/// Estimate and interval for `Θ⁰ᵢⱼ` with plug-in variance `(Θ̂ᵢᵢΘ̂ⱼⱼ + Θ̂ᵢⱼΘ̂ⱼᵢ)/n`.
pub fn precision_entry_inference(
    t_hat: &DenseMatrix,
    theta_hat: &DenseMatrix,
    i: usize,
    j: usize,
    n: usize,
    level: f64,
) -> Result<DebiasedEstimate> {
    let p = theta_hat.rows();
    for idx in [i, j] {
        if idx >= p || idx >= t_hat.rows() {
            return Err(Error::IndexOutOfRange { index: idx, dim: p.min(t_hat.rows()) });
        }
    }
    if n == 0 {
        return Err(Error::InvalidConfig("variance needs n >= 1".into()));
    }
    let q = theta_hat[(i, i)] * theta_hat[(j, j)] + theta_hat[(i, j)] * theta_hat[(j, i)];
    let variance = checked_variance(q)? / n as f64;
    DebiasedEstimate::new(t_hat[(i, j)], variance, level, VarianceSource::PlugInThetaDiag)
}

/// Entry `(i, j)` of `T̂` and its interval from the two nodewise columns
/// `Θ̂ᵢ`, `Θ̂ⱼ` alone, with `Σ̂` applied through the design.
pub fn precision_entry_from_columns(
    theta_i: &[f64],
    theta_j: &[f64],
    i: usize,
    j: usize,
    x: &DenseMatrix,
    level: f64,
) -> Result<DebiasedEstimate> {
    let p = x.cols();
    if theta_i.len() != p || theta_j.len() != p {
        return Err(dims(format!("columns of length {} and {} for p = {p}", theta_i.len(), theta_j.len())));
    }
    for idx in [i, j] {
        if idx >= p {
            return Err(Error::IndexOutOfRange { index: idx, dim: p });
        }
    }
    let n = x.rows();
    if n == 0 {
        return Err(Error::InvalidConfig("variance needs n >= 1".into()));
    }
    // same orientation as the mirrored upper triangle of the full matrix
    let ((a, ca), (b, cb)) = if i <= j { ((i, theta_i), (j, theta_j)) } else { ((j, theta_j), (i, theta_i)) };
    let xb = x.matvec(cb)?;
    let xa = x.matvec(ca)?;
    let value = ca[b] + cb[a] - dot(&xa, &xb) / n as f64;
    let q = theta_i[i] * theta_j[j] + theta_i[j] * theta_j[i];
    let variance = checked_variance(q)? / n as f64;
    DebiasedEstimate::new(value, variance, level, VarianceSource::PlugInThetaDiag)
}
