//! Synthetic Gaussian designs, sparse coefficient vectors and linear-model
//! responses. Every generator is a pure function of its inputs and a seed.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::linalg::{self, cholesky, invert_spd, DenseMatrix, DenseVector};
use crate::rng::{derive_seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceFamily {
    #[default]
    Identity,
    /// `Σᵢⱼ = ρ^|i−j|`
    Toeplitz { rho: f64 },
    /// `Σᵢⱼ = ρ` off the diagonal.
    Equicorrelation { rho: f64 },
    /// Unit-diagonal precision with `off_diag` on the first `bandwidth` off-diagonals.
    BandedPrecision { bandwidth: usize, off_diag: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceSpec {
    pub family: CovarianceFamily,
    pub dim: usize,
}

/// Population covariance `Σ₀` with its precision `Θ₀ = Σ₀⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    pub sigma: DenseMatrix,
    pub theta: DenseMatrix,
}

pub fn build_covariance(spec: &CovarianceSpec) -> Result<Covariance> {
    let p = spec.dim;
    match spec.family {
        CovarianceFamily::Identity => {
            Ok(Covariance { sigma: DenseMatrix::identity(p), theta: DenseMatrix::identity(p) })
        }
        CovarianceFamily::Toeplitz { rho } | CovarianceFamily::Equicorrelation { rho } => {
            if !(rho.abs() < 1.0) {
                return Err(Error::InvalidConfig(format!("correlation {rho} must satisfy |rho| < 1")));
            }
            let toeplitz = matches!(spec.family, CovarianceFamily::Toeplitz { .. });
            let mut sigma = DenseMatrix::identity(p);
            for j in 0..p {
                for i in 0..p {
                    if i != j {
                        sigma[(i, j)] = if toeplitz { rho.powi(i.abs_diff(j) as i32) } else { rho };
                    }
                }
            }
            let theta = invert_spd(&sigma)?;
            Ok(Covariance { sigma, theta })
        }
        CovarianceFamily::BandedPrecision { bandwidth, off_diag } => {
            if !off_diag.is_finite() {
                return Err(Error::InvalidConfig("banded precision off_diag must be finite".into()));
            }
            let mut theta = DenseMatrix::identity(p);
            for j in 0..p {
                for i in 0..p {
                    let d = i.abs_diff(j);
                    if d > 0 && d <= bandwidth {
                        theta[(i, j)] = off_diag;
                    }
                }
            }
            let sigma = invert_spd(&theta)?;
            Ok(Covariance { sigma, theta })
        }
    }
}

/// `n` independent rows drawn from `N(0, Σ₀)` as `L·z`.
pub fn sample_mvn(n: usize, sigma0: &DenseMatrix, seed: u64) -> Result<DenseMatrix> {
    Ok(sample_mvn_with_factor(n, &cholesky(sigma0)?, seed))
}

/// [`sample_mvn`] given the lower Cholesky factor `L` of `Σ₀`, for callers
/// drawing many designs from one covariance.
pub fn sample_mvn_with_factor(n: usize, l: &DenseMatrix, seed: u64) -> DenseMatrix {
    let p = l.rows();
    let diagonal = (0..p).all(|a| (0..a).all(|b| l[(a, b)] == 0.0));
    let mut x = DenseMatrix::zeros(n, p);
    let mut stream = Stream::new(seed);
    let mut z = vec![0.0; p];
    for i in 0..n {
        stream.fill_normal(&mut z);
        for a in 0..p {
            x[(i, a)] = if diagonal {
                l[(a, a)] * z[a]
            } else {
                let mut s = 0.0;
                for (b, zb) in z.iter().enumerate().take(a + 1) {
                    s += l[(a, b)] * zb;
                }
                s
            };
        }
    }
    x
}

/// Exactly `s` nonzeros of magnitude `signal/√s` with alternating signs, at
/// seed-chosen positions (signs alternate in index order).
pub fn make_sparse_beta(p: usize, s: usize, signal: f64, seed: u64) -> Result<DenseVector> {
    if s > p {
        return Err(Error::SparsityExceedsDim { s, p });
    }
    let mut beta = DenseVector::zeros(p);
    if s == 0 {
        return Ok(beta);
    }
    let mut stream = Stream::new(seed);
    let mut idx: Vec<usize> = (0..p).collect();
    for k in 0..s {
        let pick = k + stream.below(p - k);
        idx.swap(k, pick);
    }
    let mut support = idx[..s].to_vec();
    support.sort_unstable();
    let magnitude = signal / (s as f64).sqrt();
    for (k, j) in support.into_iter().enumerate() {
        beta[j] = if k % 2 == 0 { magnitude } else { -magnitude };
    }
    Ok(beta)
}

/// `Y = Xβ₀ + σ·z`.
pub fn simulate_linear(x: &DenseMatrix, beta0: &[f64], sigma_noise: f64, seed: u64) -> Result<DenseVector> {
    if !(sigma_noise > 0.0) || !sigma_noise.is_finite() {
        return Err(Error::InvalidConfig(format!("noise level {sigma_noise} must be positive")));
    }
    if beta0.len() != x.cols() {
        return Err(dims(format!("design has {} columns, beta has {}", x.cols(), beta0.len())));
    }
    let mut y = x.matvec(beta0)?;
    let mut stream = Stream::new(seed);
    for yi in y.iter_mut() {
        *yi += sigma_noise * stream.normal();
    }
    Ok(y)
}

fn default_sigma_noise() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearModelSpec {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub signal: f64,
    #[serde(default = "default_sigma_noise")]
    pub sigma_noise: f64,
    #[serde(default)]
    pub covariance: CovarianceFamily,
    pub seed: u64,
}

/// Observations `(X, Y)` together with the truth that generated them.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: DenseMatrix,
    pub y: DenseVector,
    pub beta0: DenseVector,
    pub sigma0: DenseMatrix,
    pub theta0: DenseMatrix,
    pub seed: u64,
}

/// Child-stream indices for the parts of one linear-model draw.
pub(crate) const STREAM_DESIGN: u64 = 0;
pub(crate) const STREAM_BETA: u64 = 1;
pub(crate) const STREAM_NOISE: u64 = 2;

pub fn generate_linear(spec: &LinearModelSpec) -> Result<Dataset> {
    let cov = build_covariance(&CovarianceSpec { family: spec.covariance, dim: spec.p })?;
    let x = sample_mvn(spec.n, &cov.sigma, derive_seed(spec.seed, STREAM_DESIGN))?;
    let beta0 = make_sparse_beta(spec.p, spec.s, spec.signal, derive_seed(spec.seed, STREAM_BETA))?;
    let y = simulate_linear(&x, &beta0, spec.sigma_noise, derive_seed(spec.seed, STREAM_NOISE))?;
    Ok(Dataset { x, y, beta0, sigma0: cov.sigma, theta0: cov.theta, seed: spec.seed })
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    spec: &'a LinearModelSpec,
    seed: u64,
    files: [(&'static str, &'static str); 5],
}

impl Dataset {
    /// Writes `x.csv`, `y.csv`, `beta0.csv`, `sigma0.csv`, `theta0.csv` and `manifest.json`.
    pub fn export(&self, spec: &LinearModelSpec, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let create = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
        linalg::write_csv(&self.x, create("x.csv")?)?;
        linalg::write_vector_csv(&self.y, create("y.csv")?)?;
        linalg::write_vector_csv(&self.beta0, create("beta0.csv")?)?;
        linalg::write_csv(&self.sigma0, create("sigma0.csv")?)?;
        linalg::write_csv(&self.theta0, create("theta0.csv")?)?;
        let manifest = Manifest {
            spec,
            seed: self.seed,
            files: [
                ("x", "x.csv"),
                ("y", "y.csv"),
                ("beta0", "beta0.csv"),
                ("sigma0", "sigma0.csv"),
                ("theta0", "theta0.csv"),
            ],
        };
        serde_json::to_writer_pretty(create("manifest.json")?, &manifest)?;
        Ok(())
    }
}
