use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// `sup_x |F_n(x) - F(x)|` for the empirical CDF of `samples`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("KS statistic needs at least 2 samples".into()));
    }
    let mut xs = samples.to_vec();
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("NaN sample".into()));
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// KS distance to the standard normal.
pub fn ks_normal(samples: &[f64]) -> Result<f64> {
    let phi = Normal::standard();
    ks_statistic(samples, |x| phi.cdf(x))
}

/// Two-sample KS distance `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("both samples must be nonempty".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Column means, in row order with compensated sums.
pub fn column_means(rows: &[Vec<f64>]) -> Vec<f64> {
    let k = rows.first().map_or(0, Vec::len);
    let n = rows.len() as f64;
    (0..k).map(|c| rows.iter().map(|r| r[c]).collect::<CompensatedSum>().value() / n).collect()
}

/// Unbiased sample covariance of the columns of `rows`.
pub fn empirical_cov(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if rows.len() < 2 {
        return Err(Error::InvalidArgument("covariance needs at least 2 rows".into()));
    }
    let k = rows[0].len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidArgument("rows have different lengths".into()));
    }
    let mean = column_means(rows);
    let denom = (rows.len() - 1) as f64;
    let mut cov = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a..k {
            let s: CompensatedSum = rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).collect();
            cov[a][b] = s.value() / denom;
            cov[b][a] = cov[a][b];
        }
    }
    Ok(cov)
}
