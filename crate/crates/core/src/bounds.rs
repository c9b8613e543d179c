//! Closed-form variance lower bounds and the perturbation directions that
//! attain them.
//!
//! All bounds are the leading terms; the vanishing corrections are not
//! modelled.

use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::lasso::LassoConfig;
use crate::linalg::{dot, invert_spd, min_eigenvalue, quadratic_form, DenseMatrix, DenseVector};
use crate::nodewise::fit_nodewise_column;

/// Directions longer than this are summarized rather than inlined in reports.
pub const INLINE_DIRECTION_MAX_DIM: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Direction {
    Vector(DenseVector),
    Matrix(DenseMatrix),
}

impl Direction {
    /// Inline form for small problems, otherwise norms and support size.
    pub fn summary(&self) -> serde_json::Value {
        match self {
            Self::Vector(v) if v.len() <= INLINE_DIRECTION_MAX_DIM => serde_json::json!(v),
            Self::Matrix(m) if m.rows() <= INLINE_DIRECTION_MAX_DIM => serde_json::json!(m),
            Self::Vector(v) => serde_json::json!({
                "dim": v.len(), "l1": v.l1(), "l2": v.l2(), "support": v.l0(),
            }),
            Self::Matrix(m) => {
                let data = m.as_col_major();
                serde_json::json!({
                    "dim": m.rows(),
                    "max_abs": m.max_abs(),
                    "frobenius": dot(data, data).sqrt(),
                    "support": data.iter().filter(|v| **v != 0.0).count(),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBound {
    /// `n` times the variance lower bound.
    pub bound_per_sample: f64,
    pub bound: f64,
    pub direction: Direction,
    /// Whether the perturbed parameter stays in the model neighbourhood; set
    /// by [`EfficiencyBound::check_admissible`].
    pub admissible: Option<bool>,
}

impl EfficiencyBound {
    fn new(bound_per_sample: f64, n: usize, direction: Direction) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("bounds need n >= 1".into()));
        }
        Ok(Self { bound_per_sample, bound: bound_per_sample / n as f64, direction, admissible: None })
    }

    /// Checks `β₀ + h/√n ∈ B(β₀, c/√n)` for a vector direction `h`.
    pub fn check_admissible(&mut self, beta0: &[f64], set: &ModelSet, n: usize) -> Result<bool> {
        let Direction::Vector(h) = &self.direction else {
            return Err(Error::InvalidConfig("admissibility is defined for vector directions".into()));
        };
        let ok = neighborhood_membership(beta0, h, set, n)?;
        self.admissible = Some(ok);
        Ok(ok)
    }

    /// JSON value with large directions summarized.
    pub fn to_report(&self) -> serde_json::Value {
        serde_json::json!({
            "bound_per_sample": self.bound_per_sample,
            "bound": self.bound,
            "direction": self.direction.summary(),
            "admissible": self.admissible,
            "note": "leading-order term; vanishing corrections not included",
        })
    }
}

fn default_c2_bound() -> f64 {
    10.0
}

fn default_neighborhood_c() -> f64 {
    1.0
}

/// Sparse parameter set `{β : ‖β‖₀ ≤ d_n, ‖β‖₂ ≤ C}` and neighbourhood radius `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSet {
    pub d_n: usize,
    #[serde(default = "default_c2_bound")]
    pub c2_bound: f64,
    #[serde(default = "default_neighborhood_c")]
    pub neighborhood_c: f64,
}

impl ModelSet {
    pub fn new(d_n: usize) -> Self {
        Self { d_n, c2_bound: default_c2_bound(), neighborhood_c: default_neighborhood_c() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    pub l0: usize,
    pub l2: f64,
    pub sparsity_violated: bool,
    pub l2_violated: bool,
}

pub fn model_membership(beta: &[f64], set: &ModelSet) -> Membership {
    let l0 = beta.iter().filter(|v| **v != 0.0).count();
    let l2 = dot(beta, beta).sqrt();
    let sparsity_violated = l0 > set.d_n;
    let l2_violated = l2 > set.c2_bound;
    Membership { member: !sparsity_violated && !l2_violated, l0, l2, sparsity_violated, l2_violated }
}

/// `β₀ + h/√n ∈ B(d_n)` and `‖h/√n‖₂ ≤ c/√n`.
pub fn neighborhood_membership(beta0: &[f64], h: &[f64], set: &ModelSet, n: usize) -> Result<bool> {
    if beta0.len() != h.len() {
        return Err(dims(format!("β₀ has length {}, direction {}", beta0.len(), h.len())));
    }
    let root_n = (n.max(1) as f64).sqrt();
    let moved: Vec<f64> = beta0.iter().zip(h).map(|(b, d)| b + d / root_n).collect();
    Ok(model_membership(&moved, set).member && dot(h, h).sqrt() <= set.neighborhood_c)
}

fn gradient_form(theta0: &DenseMatrix, g_dot: &[f64]) -> Result<(DenseVector, f64)> {
    if g_dot.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroGradient);
    }
    let tg = theta0.matvec(g_dot)?;
    let q = dot(g_dot, &tg);
    if !(q > 0.0) {
        return Err(Error::NotPositiveDefinite { index: 0, pivot: q });
    }
    Ok((tg, q))
}

/// `c₀ = Θ₀ġ / (ġᵀΘ₀ġ)`.
pub fn worst_subdirection(theta0: &DenseMatrix, g_dot: &[f64]) -> Result<DenseVector> {
    let (mut tg, q) = gradient_form(theta0, g_dot)?;
    tg.iter_mut().for_each(|v| *v /= q);
    Ok(tg)
}

/// `h₀ = Θ₀ġ / √(ġᵀΘ₀ġ)`, which has unit `Σ₀`-norm.
pub fn normalized_direction(theta0: &DenseMatrix, g_dot: &[f64]) -> Result<DenseVector> {
    let (mut tg, q) = gradient_form(theta0, g_dot)?;
    let s = q.sqrt();
    tg.iter_mut().for_each(|v| *v /= s);
    Ok(tg)
}

/// Lower bound `σ²·ξᵀΘ₀ξ/n` for estimating `ξᵀβ` under random design.
pub fn cr_bound_linear(theta0: &DenseMatrix, xi: &[f64], n: usize, sigma_noise: f64) -> Result<EfficiencyBound> {
    let q = quadratic_form(xi, theta0, xi)?;
    let direction = match normalized_direction(theta0, xi) {
        Ok(h) => h,
        Err(Error::ZeroGradient) => DenseVector::zeros(xi.len()),
        Err(e) => return Err(e),
    };
    EfficiencyBound::new(sigma_noise * sigma_noise * q, n, Direction::Vector(direction))
}

/// Fixed-design bound `Θ̂ⱼⱼ/n` with `Θ̂ⱼ` from a nodewise regression on `x`.
pub fn cr_bound_fixed(
    x: &DenseMatrix,
    j: usize,
    lambda_j: f64,
    cfg: &LassoConfig,
    n: usize,
) -> Result<EfficiencyBound> {
    let col = fit_nodewise_column(x, j, lambda_j, cfg)?;
    let diag = 1.0 / col.tau_sq;
    let s = diag.sqrt();
    // `+ 0.0` folds the −0.0 entries left by negated zero coefficients
    let direction = DenseVector::from(col.theta_col.iter().map(|v| v / s + 0.0).collect::<Vec<_>>());
    EfficiencyBound::new(diag, n, Direction::Vector(direction))
}

/// Lower bound for `ξ₁ᵀΘξ₂` in the Gaussian graphical model, with direction
/// `H = Θ₀(ξ₁ξ₂ᵀ + ξ₂ξ₁ᵀ)Θ₀/σ`.
pub fn ggm_bound(theta0: &DenseMatrix, xi1: &[f64], xi2: &[f64], n: usize) -> Result<EfficiencyBound> {
    let p = theta0.rows();
    if xi1.len() != p || xi2.len() != p || !theta0.is_square() {
        return Err(dims(format!("ξ lengths {} and {} for a {p}x{} precision", xi1.len(), xi2.len(), theta0.cols())));
    }
    let a = theta0.matvec(xi1)?;
    let b = theta0.matvec(xi2)?;
    let (q11, q22, q12) = (dot(xi1, &a), dot(xi2, &b), dot(xi1, &b));
    let sigma_sq = q11 * q22 + q12 * q12;
    let sigma = sigma_sq.sqrt();
    let mut h = DenseMatrix::zeros(p, p);
    if sigma > 0.0 {
        for l in 0..p {
            for k in 0..p {
                h[(k, l)] = (a[k] * b[l] + b[k] * a[l]) / sigma;
            }
        }
    }
    EfficiencyBound::new(sigma_sq, n, Direction::Matrix(h))
}

/// `ġᵀ I⁻¹ ġ` for an information matrix `I`.
pub fn lecam_bound(fisher: &DenseMatrix, g_dot: &[f64]) -> Result<f64> {
    let inv = invert_spd(fisher)?;
    quadratic_form(g_dot, &inv, g_dot)
}

/// `1/√n + s·log p / n`.
pub fn minimax_rate(n: usize, p: usize, s: usize) -> f64 {
    let n = n as f64;
    1.0 / n.sqrt() + s as f64 * (p as f64).ln() / n
}

/// Smallest eigenvalue of `sigma`, a lower bound on its compatibility constant.
pub fn compatibility_lower_bound(sigma: &DenseMatrix) -> Result<f64> {
    min_eigenvalue(sigma)
}
