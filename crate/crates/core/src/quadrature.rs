//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Result, SmiError};
use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and subdivision budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadratureBudget {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Number of equal panels the interval is split into before adapting.
    pub initial_panels: usize,
}

impl Default for QuadratureBudget {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_intervals: 2_000,
            initial_panels: 1,
        }
    }
}

fn gk15<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half_len * T::lit(x);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod = kronrod + T::lit(w) * (f1 + f2);
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let value = kronrod * half_len;
    let err = ((kronrod - gauss) * half_len).abs();
    (value, err)
}

/// Integrate `f` over `[a, b]`; returns `(value, error_estimate)`.
pub fn integrate<T: Scalar, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    budget: QuadratureBudget,
) -> Result<(T, T)> {
    if a == b {
        return Ok((T::zero(), T::zero()));
    }
    let panels = budget.initial_panels.max(1);
    let width = (b - a) / T::from_usize_lossy(panels);
    let mut intervals: Vec<(T, T, T, T)> = (0..panels)
        .map(|i| {
            let lo = a + width * T::from_usize_lossy(i);
            let hi = if i + 1 == panels { b } else { lo + width };
            let (v, e) = gk15(&f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    loop {
        let total: T = intervals.iter().map(|iv| iv.2).sum();
        let err: T = intervals.iter().map(|iv| iv.3).sum();
        let target = T::lit(budget.abs_tol).max(T::lit(budget.rel_tol) * total.abs());
        if err <= target {
            return Ok((total, err));
        }
        if intervals.len() >= budget.max_intervals || !err.is_finite() {
            return Err(SmiError::QuadratureFailed {
                achieved: err.to_f64_lossy(),
                requested: target.to_f64_lossy(),
            });
        }
        // bisect the interval with the largest error
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, iv)| if iv.3 > acc.1 { (i, iv.3) } else { acc });
        let (lo, hi, _, _) = intervals.swap_remove(idx);
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(SmiError::QuadratureFailed {
                achieved: err.to_f64_lossy(),
                requested: target.to_f64_lossy(),
            });
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// `log ∫ exp(log_f(x)) dx` over `[a, b]`.
///
/// The integrand is shifted by its maximum over a coarse scan before
/// exponentiation.
pub fn integrate_log<T: Scalar, F: Fn(T) -> T>(
    log_f: F,
    a: T,
    b: T,
    budget: QuadratureBudget,
) -> Result<T> {
    let scan = 400;
    let mut shift = T::neg_infinity();
    for i in 0..=scan {
        let x = a + (b - a) * T::from_usize_lossy(i) / T::from_usize_lossy(scan);
        shift = shift.max(log_f(x));
    }
    if shift == T::neg_infinity() {
        return Ok(T::neg_infinity());
    }
    let budget = QuadratureBudget {
        initial_panels: budget.initial_panels.max(32),
        ..budget
    };
    let (v, _) = integrate(|x| (log_f(x) - shift).exp(), a, b, budget)?;
    Ok(shift + v.ln())
}
