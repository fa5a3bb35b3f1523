use serde::{Deserialize, Serialize};

use super::{check_finite, mean_std, EvalError};

/// Unconstrained dynamic time warping with absolute-difference cost and
/// steps down, right and diagonal. Not normalized.
pub fn dtw(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    if a.is_empty() {
        return Err(EvalError::EmptySeries(0));
    }
    if b.is_empty() {
        return Err(EvalError::EmptySeries(1));
    }
    check_finite(a, 0)?;
    check_finite(b, 1)?;
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &x in a {
        cur[0] = f64::INFINITY;
        for j in 1..=m {
            let best = prev[j].min(cur[j - 1]).min(prev[j - 1]);
            cur[j] = (x - b[j - 1]).abs() + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Upper-triangle entries, row by row.
    pub fn off_diagonal(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.values[i][j])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    pub matrix: DistanceMatrix,
    pub pairs: usize,
    pub mean: f64,
    pub std: f64,
}

/// DTW between every unordered pair, summarized by the population mean and
/// standard deviation over the n(n−1)/2 pairs.
pub fn pairwise_consistency(labels: &[String], traces: &[Vec<f64>]) -> Result<Consistency, EvalError> {
    use rayon::prelude::*;
    let n = traces.len();
    if n < 2 {
        return Err(EvalError::TooFew { needed: 2, got: n });
    }
    if labels.len() != n {
        return Err(EvalError::DimensionMismatch {
            row: 0,
            expected: n,
            found: labels.len(),
        });
    }
    for (i, t) in traces.iter().enumerate() {
        if t.is_empty() {
            return Err(EvalError::EmptySeries(i));
        }
        check_finite(t, i)?;
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let dists: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| dtw(&traces[i], &traces[j]))
        .collect::<Result<_, _>>()?;
    let mut values = vec![vec![0.0; n]; n];
    for (&(i, j), &d) in pairs.iter().zip(&dists) {
        values[i][j] = d;
        values[j][i] = d;
    }
    let (mean, std) = mean_std(&dists);
    Ok(Consistency {
        matrix: DistanceMatrix {
            labels: labels.to_vec(),
            values,
        },
        pairs: pairs.len(),
        mean,
        std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("t{i}")).collect()
    }

    #[test]
    fn small_cases() {
        assert_eq!(dtw(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(dtw(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        // warping absorbs the repeated value
        assert_eq!(dtw(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(dtw(&[5.0], &[1.0, 2.0]).unwrap(), 7.0);
        assert!(dtw(&[], &[1.0]).is_err());
        assert!(dtw(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn consistency_counts_pairs() {
        let same = vec![vec![1.0, 2.0, 3.0]; 3];
        let c = pairwise_consistency(&labels(3), &same).unwrap();
        assert_eq!((c.pairs, c.mean, c.std), (3, 0.0, 0.0));
        assert!(c.matrix.values.iter().flatten().all(|&v| v == 0.0));

        let two = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let c = pairwise_consistency(&labels(2), &two).unwrap();
        assert_eq!((c.pairs, c.mean, c.std), (1, 2.0, 0.0));

        let ten: Vec<Vec<f64>> = (0..10).map(|i| vec![f64::from(i); 4]).collect();
        let c = pairwise_consistency(&labels(10), &ten).unwrap();
        assert_eq!(c.pairs, 45);
        assert_eq!(c.matrix.off_diagonal().len(), 45);
        for i in 0..10 {
            assert_eq!(c.matrix.values[i][i], 0.0);
            for j in 0..10 {
                assert_eq!(c.matrix.values[i][j], c.matrix.values[j][i]);
            }
        }
        assert!(pairwise_consistency(&labels(1), &ten[..1]).is_err());
    }
}
