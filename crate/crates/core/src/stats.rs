//! Small statistical helpers.

use statrs::distribution::{ContinuousCDF, Normal};

/// Linear-interpolated percentile (`q` in [0, 1]); NaN for an empty set.
pub fn percentile(mut vals: Vec<f64>, q: f64) -> f64 {
    if vals.is_empty() {
        return f64::NAN;
    }
    vals.sort_by(|a, b| a.total_cmp(b));
    let pos = q * (vals.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    vals[lo] + (pos - lo as f64) * (vals[hi] - vals[lo])
}

pub fn mean(vals: &[f64]) -> f64 {
    if vals.is_empty() {
        return f64::NAN;
    }
    vals.iter().sum::<f64>() / vals.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(vals: &[f64]) -> f64 {
    if vals.len() < 2 {
        return f64::NAN;
    }
    let m = mean(vals);
    (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt()
}

/// Standard error of the mean.
pub fn sem(vals: &[f64]) -> f64 {
    std_dev(vals) / (vals.len() as f64).sqrt()
}

/// Standard-normal quantile.
pub fn probit(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(vec![3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(percentile(vec![1.0, 2.0], 0.5), 1.5);
        assert!(percentile(vec![], 0.5).is_nan());
    }

    #[test]
    fn sem_and_probit() {
        assert!((sem(&[1.0, 2.0, 3.0, 4.0]) - 0.645_497_224).abs() < 1e-9);
        assert!(probit(0.5).abs() < 1e-12);
        assert!((probit(0.975) - 1.959_964).abs() < 1e-5);
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]) - 0.997_948_716).abs() < 1e-8);
    }
}
