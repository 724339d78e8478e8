//! Summary statistics and chain diagnostics.

use crate::error::{Result, SmiError};
use crate::linalg::{chol_log_det, chol_solve, cholesky};
use crate::scalar::Scalar;

pub fn mean<T: Scalar>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len())
}

/// Unbiased sample variance.
pub fn variance<T: Scalar>(xs: &[T]) -> T {
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / T::from_usize_lossy(xs.len().saturating_sub(1).max(1))
}

/// Median (average of the two central values for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Effective sample size by the initial positive sequence estimator:
/// autocovariances are summed in adjacent pairs until a pair sum turns
/// non-positive.
pub fn effective_sample_size<T: Scalar>(xs: &[T]) -> Result<f64> {
    let n = xs.len();
    if n < 10 {
        return Err(SmiError::SequenceTooShort { len: n, min: 10 });
    }
    let v: Vec<f64> = xs.iter().map(|x| x.to_f64_lossy()).collect();
    let m = v.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = v.iter().map(|x| x - m).collect();
    let autocov = |lag: usize| -> f64 { c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64 };
    let g0 = autocov(0);
    if !(g0 > 0.0) {
        return Err(SmiError::DegenerateSequence);
    }
    let mut sum = 0.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = autocov(2 * k) + autocov(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        k += 1;
    }
    let sigma2 = -g0 + 2.0 * sum;
    if !(sigma2 > 0.0) {
        return Ok(n as f64);
    }
    Ok(n as f64 * g0 / sigma2)
}

/// Monte Carlo standard error of the mean of a chain.
pub fn mcse_mean<T: Scalar>(xs: &[T]) -> Result<f64> {
    let ess = effective_sample_size(xs)?;
    Ok((variance(xs).to_f64_lossy() / ess).sqrt())
}

/// Two-sample Kolmogorov–Smirnov result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
    pub effective_n: f64,
}

/// `Q_KS(λ) = 2 Σ_{j≥1} (−1)^{j−1} exp(−2j²λ²)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let term = sign * (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample KS test. `n1`/`n2` are the sample sizes used for the
/// p-value; pass effective sample sizes for autocorrelated chains.
pub fn ks_two_sample(a: &[f64], b: &[f64], n1: f64, n2: f64) -> KsTest {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / x.len() as f64 - j as f64 / y.len() as f64).abs());
    }
    let ne = n1 * n2 / (n1 + n2);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    KsTest {
        statistic: d,
        p_value: kolmogorov_q(lambda),
        effective_n: ne,
    }
}

/// Sample mean vector and covariance (row-major) of points in `d`
/// dimensions.
pub fn mean_and_covariance(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = points.first().map_or(0, Vec::len);
    let n = points.len() as f64;
    let mut mu = vec![0.0; d];
    for p in points {
        for (m, x) in mu.iter_mut().zip(p) {
            *m += x / n;
        }
    }
    let mut cov = vec![0.0; d * d];
    for p in points {
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] += (p[i] - mu[i]) * (p[j] - mu[j]) / (n - 1.0);
            }
        }
    }
    (mu, cov)
}

/// Bhattacharyya distance between Gaussian approximations of two point
/// clouds.
pub fn bhattacharyya_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    let (ma, ca) = mean_and_covariance(a);
    let (mb, cb) = mean_and_covariance(b);
    let d = ma.len();
    if d != mb.len() || d == 0 {
        return Err(SmiError::DimensionMismatch(format!("clouds of dimension {d} and {}", mb.len())));
    }
    let pooled: Vec<f64> = ca.iter().zip(&cb).map(|(x, y)| 0.5 * (x + y)).collect();
    let not_pd = |what: &str| SmiError::NotPositiveDefinite(format!("{what} covariance"));
    let lp = cholesky(&pooled, d).ok_or_else(|| not_pd("pooled"))?;
    let la = cholesky(&ca, d).ok_or_else(|| not_pd("first"))?;
    let lb = cholesky(&cb, d).ok_or_else(|| not_pd("second"))?;
    let diff: Vec<f64> = ma.iter().zip(&mb).map(|(x, y)| x - y).collect();
    let sol = chol_solve(&lp, d, &diff);
    let quad: f64 = diff.iter().zip(&sol).map(|(x, y)| x * y).sum();
    Ok(quad / 8.0 + 0.5 * (chol_log_det(&lp, d) - 0.5 * (chol_log_det(&la, d) + chol_log_det(&lb, d))))
}
