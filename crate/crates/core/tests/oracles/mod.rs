//! Brute-force grid quadrature for the two Gaussian examples, written
//! against raw data and the model definitions only.
#![allow(dead_code)]

use std::f64::consts::TAU;

const COARSE: usize = 401;
const FINE: usize = 801;
const DROP: f64 = 50.0;

/// Trapezoid nodes and normalized weights covering the bulk of `exp(f)` on
/// `[lo, hi]`, plus `log ∫ exp(f)`. Zooms in until the bulk spans enough
/// coarse points; assumes a unimodal integrand.
pub fn bulk(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let (start_lo, start_hi) = (lo, hi);
    for _ in 0..60 {
        let h = (hi - lo) / (COARSE - 1) as f64;
        let vals: Vec<f64> = (0..COARSE).map(|i| f(lo + h * i as f64)).collect();
        let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let a = vals.iter().position(|&v| v > m - DROP).unwrap();
        let b = vals.iter().rposition(|&v| v > m - DROP).unwrap();
        let (na, nb) = (a.saturating_sub(1), (b + 1).min(COARSE - 1));
        let (nlo, nhi) = (lo + h * na as f64, lo + h * nb as f64);
        if (a == 0 && lo == start_lo) || (b == COARSE - 1 && hi == start_hi) {
            panic!("integrand mass reaches the oracle range [{start_lo}, {start_hi}]");
        }
        lo = nlo;
        hi = nhi;
        if b - a >= 60 {
            break;
        }
    }
    let h = (hi - lo) / (FINE - 1) as f64;
    let xs: Vec<f64> = (0..FINE).map(|i| lo + h * i as f64).collect();
    let lv: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let m = lv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = lv
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let end = if i == 0 || i == FINE - 1 { 0.5 } else { 1.0 };
            end * h * (v - m).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    for x in &mut w {
        *x /= s;
    }
    (xs, w, m + s.ln())
}

fn moments(xs: &[f64], w: &[f64]) -> (f64, f64) {
    let mean: f64 = xs.iter().zip(w).map(|(x, w)| x * w).sum();
    let var: f64 = xs.iter().zip(w).map(|(x, w)| (x - mean).powi(2) * w).sum();
    (mean, var)
}

#[derive(Debug, Clone, Copy)]
pub struct GridMoments {
    pub phi_mean: f64,
    pub phi_var: f64,
    pub theta_mean: f64,
    pub theta_var: f64,
}

const RANGE: f64 = 200.0;

/// δ-SMI moments: φ ∝ π(φ) p(Z|φ) ∫ p_δ(Y|φ,θ̃) π(θ̃) dθ̃ and
/// θ | φ ∝ p(Y|φ,θ) π(θ). `smoothed = None` is the Cut posterior.
fn smi_moments(
    log_z: &dyn Fn(f64) -> f64,
    smoothed: Option<&dyn Fn(f64, f64) -> f64>,
    analysis: &dyn Fn(f64, f64) -> f64,
) -> GridMoments {
    let outer = |phi: f64| {
        let inner = match smoothed {
            Some(g) => bulk(&|t| g(phi, t), -RANGE, RANGE).2,
            None => 0.0,
        };
        log_z(phi) + inner
    };
    let (phis, w, _) = bulk(&outer, -RANGE, RANGE);
    let (phi_mean, phi_var) = moments(&phis, &w);
    let mut e1 = 0.0;
    let mut e2 = 0.0;
    for (&phi, &wk) in phis.iter().zip(&w) {
        if wk < 1e-300 {
            continue;
        }
        let (ts, tw, _) = bulk(&|t| analysis(phi, t), -RANGE, RANGE);
        let (m, v) = moments(&ts, &tw);
        e1 += wk * m;
        e2 += wk * (v + m * m);
    }
    GridMoments {
        phi_mean,
        phi_var,
        theta_mean: e1,
        theta_var: e2 - e1 * e1,
    }
}

fn log_normal(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (TAU * var).ln() - (x - mean).powi(2) / (2.0 * var)
}

/// `Σ_i log N(v_i; μ, s²)` from `Σ v` and `Σ v²`.
fn normal_sum(n: f64, sum: f64, sum_sq: f64, mu: f64, var: f64) -> f64 {
    -0.5 * n * (TAU * var).ln() - (sum_sq - 2.0 * mu * sum + n * mu * mu) / (2.0 * var)
}

/// Biased-data model: `Z ~ N(φ, σ_z²)`, `Y ~ N(φ + θ, σ_y²)`, flat φ,
/// `θ ~ N(0, σ_θ²)`, Gaussian smoothing kernel of scale δ.
pub fn biased_oracle(ys: &[f64], zs: &[f64], sy: f64, sz: f64, st: f64, delta: f64) -> GridMoments {
    let (n, m) = (ys.len() as f64, zs.len() as f64);
    let (sy1, sy2): (f64, f64) = (ys.iter().sum(), ys.iter().map(|y| y * y).sum());
    let (sz1, sz2): (f64, f64) = (zs.iter().sum(), zs.iter().map(|z| z * z).sum());
    let log_z = move |phi: f64| normal_sum(m, sz1, sz2, phi, sz * sz);
    let smooth = move |phi: f64, t: f64| normal_sum(n, sy1, sy2, phi + t, sy * sy + delta * delta) + log_normal(t, 0.0, st * st);
    let analysis = move |phi: f64, t: f64| normal_sum(n, sy1, sy2, phi + t, sy * sy) + log_normal(t, 0.0, st * st);
    let smoothed: Option<&dyn Fn(f64, f64) -> f64> = if delta.is_finite() { Some(&smooth) } else { None };
    smi_moments(&log_z, smoothed, &analysis)
}

/// Regression model: `Z ~ N(φ, σ_z²)`, `Y_i ~ N(φ + θx_i, σ_y²)`, flat
/// priors, Gaussian smoothing kernel of scale δ.
pub fn regression_oracle(xs: &[f64], ys: &[f64], zs: &[f64], sy: f64, sz: f64, delta: f64) -> GridMoments {
    let n = ys.len() as f64;
    let m = zs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sy1: f64 = ys.iter().sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let (sz1, sz2): (f64, f64) = (zs.iter().sum(), zs.iter().map(|z| z * z).sum());
    let rss = move |phi: f64, t: f64| {
        syy - 2.0 * phi * sy1 - 2.0 * t * sxy + n * phi * phi + 2.0 * phi * t * sx + t * t * sxx
    };
    let log_z = move |phi: f64| normal_sum(m, sz1, sz2, phi, sz * sz);
    let lik = move |phi: f64, t: f64, var: f64| -0.5 * n * (TAU * var).ln() - rss(phi, t) / (2.0 * var);
    let smooth = move |phi: f64, t: f64| lik(phi, t, sy * sy + delta * delta);
    let analysis = move |phi: f64, t: f64| lik(phi, t, sy * sy);
    let smoothed: Option<&dyn Fn(f64, f64) -> f64> = if delta.is_finite() { Some(&smooth) } else { None };
    smi_moments(&log_z, smoothed, &analysis)
}
