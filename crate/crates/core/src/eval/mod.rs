//! Evaluation metrics: run-to-run consistency, distribution distances and
//! dataset coverage.

mod autocorr;
mod coverage;
mod dtw;
mod jensen;

pub use self::autocorr::{autocorrelation, autocorrelation_profile, compare_autocorrelation, AutocorrProfile};
pub use self::coverage::{mahalanobis_coverage, CoverageReport, ThresholdFraction, DEFAULT_RIDGE};
pub use self::dtw::{dtw, pairwise_consistency, Consistency, DistanceMatrix};
pub use self::jensen::{jensen_distance, DEFAULT_JENSEN_BINS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("series {0} is empty")]
    EmptySeries(usize),
    #[error("need at least {needed} inputs, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("histogram needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("non-finite value in input {0}")]
    NonFinite(usize),
    #[error("row {row} has {found} columns, expected {expected}")]
    DimensionMismatch { row: usize, expected: usize, found: usize },
    #[error("no sequence is longer than {0} values")]
    AllTooShort(usize),
    #[error("reference covariance is not positive definite")]
    SingularCovariance,
}

pub(crate) fn check_finite(values: &[f64], which: usize) -> Result<(), EvalError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(EvalError::NonFinite(which))
    }
}

/// Population mean and standard deviation.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
