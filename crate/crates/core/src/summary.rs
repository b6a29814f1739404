//! Summary statistics of a deposition series and the discrepancy between
//! two datasets.
//!
//! The summary of a four-variable series is the 24-vector
//! `(μ[4], σ[4], ac[4], c[6], cc[6])`: per-variable mean and population
//! variance, lag-1 autocorrelation, pairwise correlation, and lag-1
//! cross-correlation. Pairs are ordered `(1,2),(1,3),(1,4),(2,3),(2,4),(3,4)`
//! and the cross-correlation of pair `(i, j)` correlates `x_i[t]` with
//! `x_j[t + 1]` (the lower-indexed variable leads).
//!
//! Any correlation with a zero-variance operand is defined as 0.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DepositionSeries, VARIABLE_NAMES};

/// Variances are floored at this value before entering [`bhattacharyya_rho`].
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Number of entries in a [`SummaryVector`].
pub const SUMMARY_LEN: usize = 24;

/// Variable pairs in fixed lexicographic order.
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SummaryError {
    #[error("series too short: {0} time points, need at least 3")]
    TooShort(usize),
    #[error("series columns have inconsistent lengths")]
    Ragged,
    #[error("non-finite value in series")]
    NonFinite,
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryVector {
    pub mu: [f64; 4],
    pub sigma: [f64; 4],
    pub ac: [f64; 4],
    pub c: [f64; 6],
    pub cc: [f64; 6],
}

impl SummaryVector {
    pub fn to_vec(&self) -> Vec<f64> {
        self.mu
            .iter()
            .chain(&self.sigma)
            .chain(&self.ac)
            .chain(&self.c)
            .chain(&self.cc)
            .copied()
            .collect()
    }

    /// Column names matching [`SummaryVector::to_vec`].
    pub fn column_names() -> Vec<String> {
        let mut names = Vec::with_capacity(SUMMARY_LEN);
        for prefix in ["mu", "sigma", "ac"] {
            names.extend(VARIABLE_NAMES.iter().map(|v| format!("{prefix}_{v}")));
        }
        for prefix in ["c", "cc"] {
            names.extend(
                PAIRS
                    .iter()
                    .map(|&(i, j)| format!("{prefix}_{}_{}", VARIABLE_NAMES[i], VARIABLE_NAMES[j])),
            );
        }
        names
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population (1/T) variance.
fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64
}

fn is_degenerate(var: f64, m: f64) -> bool {
    var <= 1e-24 * m * m
}

/// Pearson correlation, 0 if either operand has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let (vx, vy) = (variance(x), variance(y));
    if is_degenerate(vx, mx) || is_degenerate(vy, my) {
        return 0.0;
    }
    let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.len() as f64;
    (cov / (vx * vy).sqrt()).clamp(-1.0, 1.0)
}

pub fn summarize(x: &DepositionSeries) -> Result<SummaryVector, SummaryError> {
    let t = x.len();
    let vars = x.variables();
    if vars.iter().any(|v| v.len() != t) {
        return Err(SummaryError::Ragged);
    }
    if t < 3 {
        return Err(SummaryError::TooShort(t));
    }
    if vars.iter().any(|v| v.iter().any(|a| !a.is_finite())) {
        return Err(SummaryError::NonFinite);
    }
    let mut s = SummaryVector {
        mu: [0.0; 4],
        sigma: [0.0; 4],
        ac: [0.0; 4],
        c: [0.0; 6],
        cc: [0.0; 6],
    };
    for (i, v) in vars.iter().enumerate() {
        s.mu[i] = mean(v);
        s.sigma[i] = variance(v);
        s.ac[i] = pearson(&v[..t - 1], &v[1..]);
    }
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        s.c[k] = pearson(vars[i], vars[j]);
        s.cc[k] = pearson(&vars[i][..t - 1], &vars[j][1..]);
    }
    Ok(s)
}

/// Bhattacharyya distance between two normals given means and variances.
///
/// Variances below [`VARIANCE_FLOOR`] are raised to it first.
pub fn bhattacharyya_rho(mu1: f64, mu2: f64, sigma1: f64, sigma2: f64) -> Result<f64, SummaryError> {
    if ![mu1, mu2, sigma1, sigma2].iter().all(|v| v.is_finite()) {
        return Err(SummaryError::NonFinite);
    }
    if sigma1 < 0.0 || sigma2 < 0.0 {
        return Err(SummaryError::NonPositiveVariance(sigma1.min(sigma2)));
    }
    let s1 = sigma1.max(VARIANCE_FLOOR);
    let s2 = sigma2.max(VARIANCE_FLOOR);
    let shape = 0.25 * (0.25 * (s1 / s2 + s2 / s1 + 2.0)).ln();
    let location = 0.25 * (mu1 - mu2).powi(2) / (s1 + s2);
    Ok(shape + location)
}

/// Discrepancy between two summary vectors.
///
/// `(1/8) Σ (1 − exp(−ρ_i)) + (1/2) √((1/16)(‖Δac‖² + ‖Δc‖² + ‖Δcc‖²))`.
/// The first term lies in `[0, 0.5]` and the second in `[0, 1]`, so the
/// total is bounded by 1.5.
pub fn summary_discrepancy(a: &SummaryVector, b: &SummaryVector) -> Result<f64, SummaryError> {
    let mut first = 0.0;
    for i in 0..4 {
        let rho = bhattacharyya_rho(a.mu[i], b.mu[i], a.sigma[i], b.sigma[i])?;
        first += 1.0 - (-rho).exp();
    }
    let sq = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
    let corr = sq(&a.ac, &b.ac) + sq(&a.c, &b.c) + sq(&a.cc, &b.cc);
    Ok(first / 8.0 + 0.5 * (corr / 16.0).sqrt())
}

pub fn discrepancy(x1: &DepositionSeries, x2: &DepositionSeries) -> Result<f64, SummaryError> {
    summary_discrepancy(&summarize(x1)?, &summarize(x2)?)
}
