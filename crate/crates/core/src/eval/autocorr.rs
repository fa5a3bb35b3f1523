use serde::{Deserialize, Serialize};

use super::{jensen_distance, EvalError};

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Pearson correlation between the sequence and itself shifted by `lag`;
/// `None` when either side is constant or too short.
pub fn autocorrelation(x: &[f64], lag: usize) -> Option<f64> {
    if lag == 0 || x.len() < lag + 2 {
        return None;
    }
    pearson(&x[..x.len() - lag], &x[lag..])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrProfile {
    /// `per_lag[k - 1]` holds the coefficients at lag k.
    pub per_lag: Vec<Vec<f64>>,
    pub skipped_constant: usize,
    pub skipped_short: usize,
}

/// Lag 1..=max_lag coefficients of every sequence longer than max_lag + 1.
pub fn autocorrelation_profile(sequences: &[Vec<f64>], max_lag: usize) -> Result<AutocorrProfile, EvalError> {
    let mut out = AutocorrProfile {
        per_lag: vec![Vec::new(); max_lag],
        skipped_constant: 0,
        skipped_short: 0,
    };
    let mut usable = 0;
    for s in sequences {
        if s.len() <= max_lag + 1 {
            out.skipped_short += 1;
            continue;
        }
        usable += 1;
        if s.iter().all(|&v| v == s[0]) {
            out.skipped_constant += 1;
            continue;
        }
        for k in 1..=max_lag {
            if let Some(r) = autocorrelation(s, k) {
                out.per_lag[k - 1].push(r);
            }
        }
    }
    if usable == 0 {
        return Err(EvalError::AllTooShort(max_lag + 1));
    }
    Ok(out)
}

/// Jensen distance between the two profiles at each lag; `None` where
/// either side has no coefficients.
pub fn compare_autocorrelation(
    a: &AutocorrProfile,
    b: &AutocorrProfile,
    bins: usize,
) -> Result<Vec<Option<f64>>, EvalError> {
    a.per_lag
        .iter()
        .zip(&b.per_lag)
        .map(|(x, y)| {
            if x.is_empty() || y.is_empty() {
                Ok(None)
            } else {
                jensen_distance(x, y, bins).map(Some)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternation_is_perfectly_negative() {
        let x: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((autocorrelation(&x, 1).unwrap() + 1.0).abs() < 1e-12);
        assert!((autocorrelation(&x, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ramp_matches_direct_formula() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        // both halves are ramps of equal slope
        assert!((autocorrelation(&x, 1).unwrap() - 1.0).abs() < 1e-12);
        let y = [1.0, 3.0, 2.0, 5.0, 4.0];
        let (a, b) = (&y[..4], &y[1..]);
        let ma = a.iter().sum::<f64>() / 4.0;
        let mb = b.iter().sum::<f64>() / 4.0;
        let num: f64 = a.iter().zip(b).map(|(p, q)| (p - ma) * (q - mb)).sum();
        let da: f64 = a.iter().map(|p| (p - ma).powi(2)).sum();
        let db: f64 = b.iter().map(|q| (q - mb).powi(2)).sum();
        assert!((autocorrelation(&y, 1).unwrap() - num / (da * db).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn profile_skips_and_counts() {
        let seqs = vec![vec![2.0; 12], vec![1.0; 3], (0..12).map(f64::from).collect()];
        let p = autocorrelation_profile(&seqs, 7).unwrap();
        assert_eq!(p.skipped_constant, 1);
        assert_eq!(p.skipped_short, 1);
        assert_eq!(p.per_lag.len(), 7);
        assert!(p.per_lag.iter().all(|v| v.len() == 1));
        assert!(autocorrelation_profile(&[vec![1.0; 8]], 7).is_err());
        let d = compare_autocorrelation(&p, &p, 20).unwrap();
        assert!(d.iter().all(|v| *v == Some(0.0)));
    }
}
