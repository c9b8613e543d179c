//! Summary statistics over replicate samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::normal_cdf;

/// Fewest samples for which the normality diagnostics are reported.
pub const MIN_NORMALITY_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityDiagnostics {
    /// Two-sided Kolmogorov–Smirnov distance to `N(0, 1)`.
    pub ks: f64,
    /// `NaN` for a sample with no spread.
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; `None` below two samples.
pub fn sample_variance(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    Some(xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

pub fn normality_diagnostics(samples: &[f64]) -> Result<NormalityDiagnostics> {
    let m = samples.len();
    if m < MIN_NORMALITY_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_NORMALITY_SAMPLES, got: m });
    }
    if let Some(k) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(k));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mf = m as f64;
    let ks = sorted.iter().enumerate().fold(0.0f64, |d, (i, x)| {
        let f = normal_cdf(*x);
        d.max((i + 1) as f64 / mf - f).max(f - i as f64 / mf)
    });

    let mu = mean(samples);
    let central = |k: i32| samples.iter().map(|x| (x - mu).powi(k)).sum::<f64>() / mf;
    let m2 = central(2);
    let (skewness, excess_kurtosis) =
        if m2 > 0.0 { (central(3) / m2.powf(1.5), central(4) / (m2 * m2) - 3.0) } else { (f64::NAN, f64::NAN) };
    Ok(NormalityDiagnostics { ks, skewness, excess_kurtosis })
}
