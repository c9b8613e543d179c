//! ℓ1-penalized estimation, de-sparsified inference for high-dimensional
//! linear regression and Gaussian graphical models, closed-form efficiency
//! bounds, and a Monte Carlo harness that checks the estimators against them.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod datagen;
pub mod error;
pub mod inference;
pub mod lasso;
pub mod linalg;
pub mod nodewise;
pub mod par;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, DenseVector};
