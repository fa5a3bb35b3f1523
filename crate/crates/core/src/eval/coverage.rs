use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_finite, EvalError};

pub const DEFAULT_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFraction {
    pub threshold: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub reference_mean: Vec<f64>,
    /// Sample covariance with the ridge already added.
    pub reference_covariance: Vec<Vec<f64>>,
    pub distances: Vec<f64>,
    pub median: f64,
    pub frac_above: Vec<ThresholdFraction>,
}

fn to_matrix(rows: &[Vec<f64>], dim: usize, which: usize) -> Result<DMatrix<f64>, EvalError> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(EvalError::DimensionMismatch {
                row: i,
                expected: dim,
                found: r.len(),
            });
        }
        check_finite(r, which)?;
    }
    Ok(DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]))
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Mahalanobis distance of every candidate from the reference distribution.
/// The sample covariance gets `ridge · trace / d` added to its diagonal.
pub fn mahalanobis_coverage(
    reference: &[Vec<f64>],
    candidates: &[Vec<f64>],
    ridge: f64,
    thresholds: &[f64],
) -> Result<CoverageReport, EvalError> {
    let d = reference.first().map_or(0, Vec::len);
    if d == 0 || reference.len() <= d {
        return Err(EvalError::TooFew {
            needed: d + 1,
            got: reference.len(),
        });
    }
    if candidates.is_empty() {
        return Err(EvalError::TooFew { needed: 1, got: 0 });
    }
    let r = to_matrix(reference, d, 0)?;
    let c = to_matrix(candidates, d, 1)?;

    let n = r.nrows() as f64;
    let mean: DVector<f64> = r.row_mean().transpose();
    let centered = DMatrix::from_fn(r.nrows(), d, |i, j| r[(i, j)] - mean[j]);
    let mut cov = centered.transpose() * &centered / (n - 1.0);
    let shift = ridge * cov.trace() / d as f64;
    for i in 0..d {
        cov[(i, i)] += shift;
    }
    let chol = cov.clone().cholesky().ok_or(EvalError::SingularCovariance)?;
    // rounding can leave a tiny positive pivot on a rank-deficient matrix
    let scale = cov.trace() / d as f64;
    if chol.l_dirty().diagonal().iter().any(|&l| l * l <= 1e-12 * scale) {
        return Err(EvalError::SingularCovariance);
    }

    let distances: Vec<f64> = (0..c.nrows())
        .map(|i| {
            let diff = c.row(i).transpose() - &mean;
            let y = chol.l_dirty().solve_lower_triangular(&diff).expect("cholesky factor is invertible");
            y.norm()
        })
        .collect();
    let mut sorted = distances.clone();
    sorted.sort_by(f64::total_cmp);
    let frac_above = thresholds
        .iter()
        .map(|&t| ThresholdFraction {
            threshold: t,
            fraction: distances.iter().filter(|&&x| x > t).count() as f64 / distances.len() as f64,
        })
        .collect();
    Ok(CoverageReport {
        reference_mean: mean.iter().copied().collect(),
        reference_covariance: (0..d).map(|i| (0..d).map(|j| cov[(i, j)]).collect()).collect(),
        median: median(&sorted),
        distances,
        frac_above,
    })
}
