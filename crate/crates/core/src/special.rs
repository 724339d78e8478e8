//! Special functions: log-gamma, regularized incomplete gamma, Poisson and
//! binomial log-probabilities.
//!
//! Incomplete gamma values are returned on the log scale so that far tails
//! (counts in the hundreds against rates far from the data) stay finite.

use crate::scalar::{log_diff_exp, Scalar};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_ITER: usize = 100_000;

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    if x < T::lit(0.5) {
        // reflection
        let pi = T::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS_COEF[0]);
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::from_usize_lossy(i));
    }
    let t = x + T::lit(LANCZOS_G + 0.5);
    T::lit(0.5) * T::TAU().ln() + (x + T::lit(0.5)) * t.ln() - t + acc.ln()
}

/// `ln(n!)`.
pub fn ln_factorial<T: Scalar>(n: u64) -> T {
    if n < 2 {
        return T::zero();
    }
    ln_gamma(T::from_u64(n).expect("count representable") + T::one())
}

fn log_prefactor<T: Scalar>(a: T, x: T) -> T {
    a * x.ln() - x - ln_gamma(a)
}

// Series for P(a, x); converges quickly for x < a + 1.
fn log_p_series<T: Scalar>(a: T, x: T, tol: T) -> T {
    let mut ap = a;
    let mut del = T::one() / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap = ap + T::one();
        del = del * x / ap;
        sum = sum + del;
        if del.abs() < sum.abs() * tol {
            break;
        }
    }
    sum.ln() + log_prefactor(a, x)
}

// Modified Lentz continued fraction for Q(a, x); converges for x >= a + 1.
fn log_q_fraction<T: Scalar>(a: T, x: T, tol: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    let mut b = x + T::one() - a;
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let fi = T::from_usize_lossy(i);
        let an = -fi * (fi - a);
        b = b + T::lit(2.0);
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = T::one() / d;
        let del = d * c;
        h = h * del;
        if (del - T::one()).abs() < tol {
            break;
        }
    }
    h.ln() + log_prefactor(a, x)
}

fn gamma_tol<T: Scalar>() -> T {
    // 1e-12 relative when the type allows it.
    T::lit(1e-13).max(T::epsilon())
}

/// Log of the regularized lower incomplete gamma function `P(a, x)`.
pub fn ln_gamma_p<T: Scalar>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::neg_infinity();
    }
    if x.is_infinite() {
        return T::zero();
    }
    let tol = gamma_tol();
    if x < a + T::one() {
        log_p_series(a, x, tol)
    } else {
        let lq = log_q_fraction(a, x, tol);
        (-lq.exp()).ln_1p()
    }
}

/// Log of the regularized upper incomplete gamma function `Q(a, x)`.
pub fn ln_gamma_q<T: Scalar>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x.is_infinite() {
        return T::neg_infinity();
    }
    let tol = gamma_tol();
    if x < a + T::one() {
        let lp = log_p_series(a, x, tol);
        (-lp.exp()).ln_1p()
    } else {
        log_q_fraction(a, x, tol)
    }
}

/// Log Poisson pmf `log P(Y = k | mean)`.
pub fn poisson_ln_pmf<T: Scalar>(k: u64, mean: T) -> T {
    if !(mean > T::zero()) || !mean.is_finite() {
        return if mean == T::zero() && k == 0 {
            T::zero()
        } else {
            T::neg_infinity()
        };
    }
    let kf = T::from_u64(k).expect("count representable");
    kf * mean.ln() - mean - ln_factorial::<T>(k)
}

/// Log Poisson CDF `log P(Y <= k | mean)`; `k = -1` gives `-inf`.
pub fn poisson_ln_cdf<T: Scalar>(k: i64, mean: T) -> T {
    if k < 0 {
        return T::neg_infinity();
    }
    let a = T::from_i64(k + 1).expect("count representable");
    ln_gamma_q(a, mean)
}

/// Log of the upper Poisson tail `log P(Y > k | mean)`.
pub fn poisson_ln_sf<T: Scalar>(k: i64, mean: T) -> T {
    if k < 0 {
        return T::zero();
    }
    let a = T::from_i64(k + 1).expect("count representable");
    ln_gamma_p(a, mean)
}

/// `log P(lo <= Y <= hi | mean)` for a Poisson variable, computed from
/// whichever CDF tail keeps the difference well conditioned.
pub fn poisson_ln_interval<T: Scalar>(lo: u64, hi: u64, mean: T) -> T {
    if hi < lo {
        return T::neg_infinity();
    }
    let lo_i = lo as i64;
    let hi_i = hi as i64;
    let mean_f = mean.to_f64_lossy();
    if mean_f > hi as f64 {
        // both CDF values are small lower tails
        log_diff_exp(poisson_ln_cdf(hi_i, mean), poisson_ln_cdf(lo_i - 1, mean))
    } else {
        // upper tails: P(Y > lo-1) - P(Y > hi)
        log_diff_exp(poisson_ln_sf(lo_i - 1, mean), poisson_ln_sf(hi_i, mean))
    }
}

/// Log binomial pmf.
pub fn binomial_ln_pmf<T: Scalar>(k: u64, n: u64, p: T) -> T {
    if k > n || !(p >= T::zero() && p <= T::one()) {
        return T::neg_infinity();
    }
    let kf = T::from_u64(k).expect("count representable");
    let nf = T::from_u64(n).expect("count representable");
    let log_choose = ln_factorial::<T>(n) - ln_factorial::<T>(k) - ln_factorial::<T>(n - k);
    let a = if k == 0 { T::zero() } else { kf * p.ln() };
    let b = if k == n { T::zero() } else { (nf - kf) * (-p).ln_1p() };
    log_choose + a + b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::log_sum_exp;

    #[test]
    fn ln_gamma_integers() {
        let mut fact = 1.0_f64;
        for n in 1..30u64 {
            fact *= n as f64;
            let v: f64 = ln_factorial(n);
            assert!((v - fact.ln()).abs() < 1e-12 * fact.ln().max(1.0), "n={n}");
        }
        let half: f64 = ln_gamma(0.5);
        assert!((half - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn ln_gamma_matches_statrs() {
        for &x in &[0.1, 0.7, 1.3, 5.5, 37.2, 162.0, 711.5] {
            let ours: f64 = ln_gamma(x);
            let theirs = statrs::function::gamma::ln_gamma(x);
            assert!((ours - theirs).abs() < 1e-12 * theirs.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn incomplete_gamma_complements() {
        for &(a, x) in &[(1.0, 0.5), (3.0, 7.0), (163.0, 162.0), (50.0, 80.0), (400.0, 300.0)] {
            let p: f64 = ln_gamma_p(a, x);
            let q: f64 = ln_gamma_q(a, x);
            assert!((p.exp() + q.exp() - 1.0).abs() < 1e-12, "a={a} x={x}");
            let reference = statrs::function::gamma::gamma_ur(a, x);
            assert!((q.exp() - reference).abs() < 1e-10, "a={a} x={x}");
        }
    }

    #[test]
    fn poisson_cdf_matches_pmf_sum() {
        for &mean in &[0.3, 3.0, 25.0, 162.0] {
            let mut acc = Vec::new();
            for k in 0..400u64 {
                acc.push(poisson_ln_pmf::<f64>(k, mean));
                let direct = log_sum_exp(&acc);
                let cdf: f64 = poisson_ln_cdf(k as i64, mean);
                if direct > -600.0 {
                    assert!((cdf - direct).abs() < 1e-10 * direct.abs().max(1.0), "mean={mean} k={k}");
                }
            }
        }
    }

    #[test]
    fn poisson_interval_far_tails_are_finite() {
        let lo: f64 = poisson_ln_interval(150, 170, 1.0);
        let direct: Vec<f64> = (150..=170).map(|k| poisson_ln_pmf(k, 1.0)).collect();
        assert!((lo - log_sum_exp(&direct)).abs() < 1e-9 * lo.abs());
        let hi: f64 = poisson_ln_interval(3, 5, 900.0);
        let direct: Vec<f64> = (3..=5).map(|k| poisson_ln_pmf(k, 900.0)).collect();
        assert!((hi - log_sum_exp(&direct)).abs() < 1e-9 * hi.abs());
    }

    #[test]
    fn pmf_reference_value() {
        let v: f64 = poisson_ln_pmf(5, 5.0);
        assert!((v.exp() - 0.175_467_369_767_850_6).abs() < 1e-15);
    }

    #[test]
    fn binomial_normalizes() {
        let n = 37;
        let lps: Vec<f64> = (0..=n).map(|k| binomial_ln_pmf(k, n, 0.23)).collect();
        assert!(log_sum_exp(&lps).abs() < 1e-13);
        assert_eq!(binomial_ln_pmf::<f64>(0, 10, 0.0), 0.0);
        assert_eq!(binomial_ln_pmf::<f64>(1, 10, 0.0), f64::NEG_INFINITY);
        assert_eq!(binomial_ln_pmf::<f64>(1, 10, 1.2), f64::NEG_INFINITY);
    }
}
