use super::{check_finite, EvalError};

pub const DEFAULT_JENSEN_BINS: usize = 20;

fn histogram(values: &[f64], lo: f64, width: f64, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    for &v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        h[i] += 1.0;
    }
    let n = values.len() as f64;
    h.iter_mut().for_each(|c| *c /= n);
    h
}

/// Square root of the base-2 Jensen–Shannon divergence between equal-width
/// histograms of both samples over their pooled range.
pub fn jensen_distance(a: &[f64], b: &[f64], bins: usize) -> Result<f64, EvalError> {
    if a.is_empty() {
        return Err(EvalError::EmptySeries(0));
    }
    if b.is_empty() {
        return Err(EvalError::EmptySeries(1));
    }
    if bins < 2 {
        return Err(EvalError::TooFewBins(bins));
    }
    check_finite(a, 0)?;
    check_finite(b, 1)?;
    let (lo, hi) = a
        .iter()
        .chain(b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi <= lo {
        return Ok(0.0);
    }
    let width = (hi - lo) / bins as f64;
    let p = histogram(a, lo, width, bins);
    let q = histogram(b, lo, width, bins);
    let kl = |x: f64, m: f64| if x > 0.0 { x * (x / m).log2() } else { 0.0 };
    let js: f64 = p
        .iter()
        .zip(&q)
        .map(|(&x, &y)| {
            let m = (x + y) / 2.0;
            (kl(x, m) + kl(y, m)) / 2.0
        })
        .sum();
    Ok(js.clamp(0.0, 1.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities() {
        let x = [0.1, 0.5, 0.5, 0.9];
        assert_eq!(jensen_distance(&x, &x, 20).unwrap(), 0.0);
        assert_eq!(jensen_distance(&[0.0, 0.0, 1.0, 1.0], &[0.0, 1.0], 2).unwrap(), 0.0);
        assert_eq!(jensen_distance(&[0.0, 0.1], &[5.0, 5.5], 20).unwrap(), 1.0);
        assert_eq!(jensen_distance(&[3.0], &[3.0, 3.0], 20).unwrap(), 0.0);
    }

    #[test]
    fn half_overlap_oracle() {
        // p = (1/2, 1/2, 0), q = (0, 1/2, 1/2): JS = 1/2
        let d = jensen_distance(&[0.0, 1.0], &[1.0, 2.0], 3).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bad_inputs() {
        assert!(jensen_distance(&[], &[1.0], 20).is_err());
        assert!(jensen_distance(&[1.0], &[1.0], 1).is_err());
        assert!(jensen_distance(&[f64::INFINITY], &[1.0], 4).is_err());
    }
}
