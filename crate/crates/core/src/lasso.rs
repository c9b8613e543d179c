//! ℓ1-penalized least squares by cyclic coordinate descent.
//!
//! The objective is `‖Y − Xβ‖²/n + 2λ‖β‖₁`. No intercept is fitted and the
//! columns are used as given.

use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::linalg::{axpy, dot, DenseMatrix, DenseVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LassoConfig {
    /// Stop once no coordinate moves by this much in a full sweep.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Constant `c` in `λ = c·√(log p / n)`.
    pub lambda_constant: f64,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_sweeps: 100_000, lambda_constant: std::f64::consts::SQRT_2 }
    }
}

impl LassoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("lasso tol {} must be positive", self.tol)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidConfig("lasso max_sweeps must be at least 1".into()));
        }
        if !(self.lambda_constant > 0.0) {
            return Err(Error::InvalidConfig("lambda_constant must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub beta_hat: DenseVector,
    pub lambda: f64,
    pub objective: f64,
    /// Objective after every sweep, in order.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
    pub sweeps_used: usize,
    pub kkt_violation: f64,
    pub converged: bool,
}

impl LassoFit {
    pub fn support_size(&self) -> usize {
        self.beta_hat.l0()
    }
}

/// `sign(z)·max(|z| − t, 0)`
#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// `c·√(log p / n)` with the natural logarithm.
pub fn default_lambda(n: usize, p: usize, c: f64) -> f64 {
    c * ((p as f64).ln() / n as f64).sqrt()
}

pub fn lasso_objective(x: &DenseMatrix, y: &[f64], beta: &[f64], lambda: f64) -> Result<f64> {
    let r = residual(x, y, beta)?;
    Ok(objective_from_residual(&r, beta, lambda))
}

fn objective_from_residual(r: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let n = r.len().max(1) as f64;
    dot(r, r) / n + 2.0 * lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

fn residual(x: &DenseMatrix, y: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
    if y.len() != x.rows() || beta.len() != x.cols() {
        return Err(dims(format!(
            "design {}x{}, response {}, coefficients {}",
            x.rows(),
            x.cols(),
            y.len(),
            beta.len()
        )));
    }
    let fitted = x.matvec(beta)?;
    Ok(y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect())
}

pub fn fit_lasso(x: &DenseMatrix, y: &[f64], lambda: f64, cfg: &LassoConfig) -> Result<LassoFit> {
    if y.len() != x.rows() {
        return Err(dims(format!("design has {} rows, response has {}", x.rows(), y.len())));
    }
    let cols: Vec<&[f64]> = (0..x.cols()).map(|j| x.col(j)).collect();
    let fit = solve(&cols, y, lambda, cfg)?;
    let kkt_violation = kkt_residual(x, y, &fit.beta_hat, lambda)?;
    Ok(LassoFit { kkt_violation, ..fit })
}

/// Coordinate descent over an arbitrary set of design columns.
///
/// After each full sweep the active coordinates are cycled on their own until
/// they settle; convergence is only declared by a full sweep.
pub(crate) fn solve(cols: &[&[f64]], y: &[f64], lambda: f64, cfg: &LassoConfig) -> Result<LassoFit> {
    cfg.validate()?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!("lambda {lambda} must be finite and non-negative")));
    }
    let n = y.len();
    let p = cols.len();
    let inv_n = if n == 0 { 0.0 } else { 1.0 / n as f64 };
    let col_sq: Vec<f64> = cols.iter().map(|c| dot(c, c) * inv_n).collect();

    let mut beta = vec![0.0; p];
    let mut r = y.to_vec();
    let mut trace = Vec::new();
    let mut converged = false;

    let update = |j: usize, beta: &mut [f64], r: &mut [f64]| -> f64 {
        let d = col_sq[j];
        if d <= 0.0 {
            return 0.0;
        }
        let old = beta[j];
        let z = dot(cols[j], r) * inv_n + d * old;
        let new = soft_threshold(z, lambda) / d;
        let delta = new - old;
        if delta != 0.0 {
            axpy(-delta, cols[j], r);
            beta[j] = new;
        }
        delta.abs()
    };

    let all: Vec<usize> = (0..p).collect();
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        let max_delta = all.iter().fold(0.0f64, |m, &j| m.max(update(j, &mut beta, &mut r)));
        sweeps += 1;
        trace.push(objective_from_residual(&r, &beta, lambda));
        if max_delta < cfg.tol {
            converged = true;
            break;
        }
        let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
        while sweeps < cfg.max_sweeps {
            let max_delta = active.iter().fold(0.0f64, |m, &j| m.max(update(j, &mut beta, &mut r)));
            sweeps += 1;
            trace.push(objective_from_residual(&r, &beta, lambda));
            if max_delta < cfg.tol {
                break;
            }
        }
    }

    // recompute the residual to shed accumulated round-off
    let mut fresh = y.to_vec();
    for (j, b) in beta.iter().enumerate() {
        if *b != 0.0 {
            axpy(-b, cols[j], &mut fresh);
        }
    }
    Ok(LassoFit {
        objective: objective_from_residual(&fresh, &beta, lambda),
        beta_hat: DenseVector::from(beta),
        lambda,
        objective_trace: trace,
        sweeps_used: sweeps,
        kkt_violation: 0.0,
        converged,
    })
}

/// Largest violation of the subgradient optimality conditions at `beta_hat`.
pub fn kkt_residual(x: &DenseMatrix, y: &[f64], beta_hat: &[f64], lambda: f64) -> Result<f64> {
    if y.len() != x.rows() || beta_hat.len() != x.cols() {
        return Err(dims(format!(
            "design {}x{}, response {}, coefficients {}",
            x.rows(),
            x.cols(),
            y.len(),
            beta_hat.len()
        )));
    }
    let cols: Vec<&[f64]> = (0..x.cols()).map(|j| x.col(j)).collect();
    Ok(kkt_residual_columns(&cols, y, beta_hat, lambda))
}

pub(crate) fn kkt_residual_columns(cols: &[&[f64]], y: &[f64], beta_hat: &[f64], lambda: f64) -> f64 {
    let mut r = y.to_vec();
    for (c, b) in cols.iter().zip(beta_hat) {
        if *b != 0.0 {
            axpy(-b, c, &mut r);
        }
    }
    let n = y.len().max(1) as f64;
    cols.iter().zip(beta_hat).fold(0.0f64, |worst, (c, b)| {
        let g = dot(c, &r) / n;
        let v = if *b != 0.0 { (g - lambda * b.signum()).abs() } else { (g.abs() - lambda).max(0.0) };
        worst.max(v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::sample_mvn;
    use crate::rng::Stream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Exhaustive objective minimum over a 401×401 grid on [−2, 2]², together
    /// with the largest objective change to a neighbouring grid point.
    pub(crate) fn grid_minimum(x: &DenseMatrix, y: &[f64], lambda: f64) -> (f64, f64) {
        let at = |k: usize| -2.0 + 0.01 * k as f64;
        let f = |a: usize, b: usize| lasso_objective(x, y, &[at(a), at(b)], lambda).unwrap();
        let (mut best, mut arg) = (f64::INFINITY, (0, 0));
        for a in 0..401 {
            for b in 0..401 {
                let v = f(a, b);
                if v < best {
                    best = v;
                    arg = (a, b);
                }
            }
        }
        let mut slack = 0.0f64;
        for da in -1i64..=1 {
            for db in -1i64..=1 {
                let (a, b) = (arg.0 as i64 + da, arg.1 as i64 + db);
                if (0..401).contains(&a) && (0..401).contains(&b) {
                    slack = slack.max(f(a as usize, b as usize) - best);
                }
            }
        }
        (best, slack)
    }

    fn orthonormal_design(n: usize) -> DenseMatrix {
        // two orthogonal ±1 columns, XᵀX/n = I
        let c1: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let c2: Vec<f64> = (0..n).map(|i| if (i / 2) % 2 == 0 { 1.0 } else { -1.0 }).collect();
        DenseMatrix::from_columns(n, &[c1, c2]).unwrap()
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(1.0, 1.0), 0.0);
    }

    #[test]
    fn orthonormal_closed_form() {
        let x = orthonormal_design(8);
        let y = x.matvec(&[1.0, 0.0]).unwrap();
        let fit = fit_lasso(&x, &y, 0.3, &LassoConfig::default()).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.beta_hat[0], 0.7, epsilon = 1e-12);
        assert_eq!(fit.beta_hat[1], 0.0);
        let xty = x.tr_matvec(&y).unwrap();
        for j in 0..2 {
            assert_abs_diff_eq!(fit.beta_hat[j], soft_threshold(xty[j] / 8.0, 0.3), epsilon = 1e-12);
        }
    }

    #[test]
    fn full_shrinkage_above_lambda_max() {
        let x = sample_mvn(30, &DenseMatrix::identity(5), 1).unwrap();
        let mut s = Stream::new(2);
        let y: Vec<f64> = (0..30).map(|_| s.normal()).collect();
        let lambda_max = x.tr_matvec(&y).unwrap().linf() / 30.0;
        let fit = fit_lasso(&x, &y, lambda_max, &LassoConfig::default()).unwrap();
        assert_eq!(fit.beta_hat.l0(), 0);
        assert_eq!(kkt_residual(&x, &y, &fit.beta_hat, lambda_max).unwrap(), 0.0);
    }

    #[test]
    fn matches_grid_search_oracle() {
        for seed in 0..4 {
            let x = sample_mvn(20, &DenseMatrix::identity(2), 100 + seed).unwrap();
            let mut s = Stream::new(200 + seed);
            let y: Vec<f64> = (0..20).map(|i| 0.8 * x[(i, 0)] - 0.4 * x[(i, 1)] + 0.3 * s.normal()).collect();
            let fit = fit_lasso(&x, &y, 0.1, &LassoConfig::default()).unwrap();
            let (best, slack) = grid_minimum(&x, &y, 0.1);
            assert!(fit.objective <= best + 1e-12);
            assert!(best - fit.objective <= slack);
        }
    }

    #[test]
    fn kkt_examples() {
        let x = sample_mvn(40, &DenseMatrix::identity(4), 3).unwrap();
        let y = x.matvec(&[1.0, -1.0, 0.0, 0.5]).unwrap();
        let cfg = LassoConfig::default();
        let fit = fit_lasso(&x, &y, 0.05, &cfg).unwrap();
        assert!(fit.kkt_violation <= 10.0 * cfg.tol);

        let mut perturbed = fit.beta_hat.clone();
        perturbed[0] += 0.1;
        assert!(kkt_residual(&x, &y, &perturbed, 0.05).unwrap() > 0.01);
        assert!(matches!(kkt_residual(&x, &y, &[0.0], 0.05), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn default_lambda_examples() {
        assert_abs_diff_eq!(default_lambda(100, 400, std::f64::consts::SQRT_2), 0.3462, epsilon = 5e-5);
        assert_abs_diff_eq!(default_lambda(100, 3, 1.0), 0.1048, epsilon = 5e-5);
        assert_abs_diff_eq!(default_lambda(50, 10, 2.0), 2.0 * default_lambda(50, 10, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn zero_columns_stay_pinned() {
        let mut x = sample_mvn(25, &DenseMatrix::identity(3), 4).unwrap();
        x.col_mut(1).fill(0.0);
        let y = x.matvec(&[1.0, 0.0, -1.0]).unwrap();
        let fit = fit_lasso(&x, &y, 0.01, &LassoConfig::default()).unwrap();
        assert_eq!(fit.beta_hat[1], 0.0);
        assert!(fit.converged);
    }

    #[test]
    fn nonconvergence_is_reported_not_raised() {
        let x = sample_mvn(50, &DenseMatrix::identity(20), 5).unwrap();
        let y = x.matvec(&[0.3; 20]).unwrap();
        let cfg = LassoConfig { max_sweeps: 1, ..LassoConfig::default() };
        let fit = fit_lasso(&x, &y, 0.01, &cfg).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.sweeps_used, 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = DenseMatrix::identity(2);
        assert!(matches!(fit_lasso(&x, &[1.0], 0.1, &LassoConfig::default()), Err(Error::DimensionMismatch(_))));
        assert!(matches!(fit_lasso(&x, &[1.0, 1.0], -0.1, &LassoConfig::default()), Err(Error::InvalidConfig(_))));
        let bad = LassoConfig { tol: 0.0, ..LassoConfig::default() };
        assert!(fit_lasso(&x, &[1.0, 1.0], 0.1, &bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn objective_trace_is_monotone_and_kkt_holds(seed in any::<u64>(), p in 2usize..40, lambda in 0.01f64..0.5) {
            let x = sample_mvn(30, &DenseMatrix::identity(p), seed).unwrap();
            let mut s = Stream::new(seed ^ 1);
            let y: Vec<f64> = (0..30).map(|i| x[(i, 0)] - 0.5 * x[(i, 1)] + s.normal()).collect();
            let cfg = LassoConfig::default();
            let fit = fit_lasso(&x, &y, lambda, &cfg).unwrap();
            for w in fit.objective_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
            }
            let recomputed = lasso_objective(&x, &y, &fit.beta_hat, lambda).unwrap();
            prop_assert!((recomputed - fit.objective).abs() <= 1e-10);
            prop_assert!(fit.converged);
            prop_assert!(fit.kkt_violation <= 100.0 * cfg.tol);
        }

        #[test]
        fn l1_norm_shrinks_along_lambda_grid(seed in any::<u64>()) {
            let x = sample_mvn(25, &DenseMatrix::identity(10), seed).unwrap();
            let mut s = Stream::new(seed.wrapping_add(7));
            let y: Vec<f64> = (0..25).map(|i| 2.0 * x[(i, 3)] + s.normal()).collect();
            let cfg = LassoConfig::default();
            let mut prev = f64::INFINITY;
            for k in 1..=12 {
                let fit = fit_lasso(&x, &y, 0.05 * k as f64, &cfg).unwrap();
                let l1 = fit.beta_hat.l1();
                prop_assert!(l1 <= prev + 1e-6);
                prev = l1;
            }
        }

        #[test]
        fn two_dimensional_grid_equivalence(seed in any::<u64>()) {
            let x = sample_mvn(20, &DenseMatrix::identity(2), seed).unwrap();
            let mut s = Stream::new(seed ^ 0xabc);
            let y: Vec<f64> = (0..20).map(|i| 0.6 * x[(i, 0)] + 0.5 * x[(i, 1)] + 0.5 * s.normal()).collect();
            let fit = fit_lasso(&x, &y, 0.08, &LassoConfig::default()).unwrap();
            prop_assume!(fit.beta_hat.linf() < 1.9);
            let (best, slack) = grid_minimum(&x, &y, 0.08);
            prop_assert!(fit.objective <= best + 1e-12);
            prop_assert!(best - fit.objective <= slack);
        }
    }
}
