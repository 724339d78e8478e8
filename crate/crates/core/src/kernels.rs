//! Smoothing kernels `K_δ(y, ỹ)` and the kernel-smoothed likelihoods
//! `p_δ(y | φ, θ̃) = ∫ p(ỹ | φ, θ̃) K_δ(y, ỹ) dỹ`.
//!
//! Kernels act coordinate-wise, so the smoothed likelihood of a dataset is the
//! product of the per-observation values. Continuous kernels are densities in
//! their second argument; the count kernels are pmfs over the non-negative
//! integers within the δ-neighbourhood of the observed count.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmiError};
use crate::quadrature::{integrate_log, QuadratureBudget};
use crate::scalar::{log_sum_exp, normal_log_pdf, Scalar};
use crate::special::{poisson_ln_interval, poisson_ln_pmf};

/// Smoothing kernel with bandwidth δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "delta", rename_all = "snake_case")]
pub enum KernelSpec<T> {
    /// `N(ỹ - y; 0, δ²)`.
    Gaussian(T),
    /// Uniform on `|ỹ - y| < δ`.
    TopHat(T),
    /// Uniform over the integers `ỹ >= 0` with `|ỹ - y| <= δ`.
    DiscreteUniform(T),
    /// Top hat whose half-width grows as `√y · δ` (δ at `y = 0`).
    ScaledTopHat(T),
}

impl<T: Scalar> KernelSpec<T> {
    pub fn bandwidth(&self) -> T {
        match *self {
            Self::Gaussian(d) | Self::TopHat(d) | Self::DiscreteUniform(d) | Self::ScaledTopHat(d) => d,
        }
    }

    /// Same kernel family with a new bandwidth.
    pub fn with_bandwidth(&self, delta: T) -> Self {
        match self {
            Self::Gaussian(_) => Self::Gaussian(delta),
            Self::TopHat(_) => Self::TopHat(delta),
            Self::DiscreteUniform(_) => Self::DiscreteUniform(delta),
            Self::ScaledTopHat(_) => Self::ScaledTopHat(delta),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian(_) => "gaussian",
            Self::TopHat(_) => "top_hat",
            Self::DiscreteUniform(_) => "discrete_uniform",
            Self::ScaledTopHat(_) => "scaled_top_hat",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.bandwidth();
        let ok = match self {
            Self::DiscreteUniform(_) => d >= T::zero(),
            _ => d > T::zero(),
        };
        if ok && !d.is_nan() {
            Ok(())
        } else {
            Err(SmiError::InvalidSetting(format!(
                "kernel {} needs a {} bandwidth, got {}",
                self.name(),
                if matches!(self, Self::DiscreteUniform(_)) { "non-negative" } else { "positive" },
                d
            )))
        }
    }

    /// True for kernels that only make sense on count data.
    pub fn is_discrete(&self) -> bool {
        matches!(self, Self::DiscreteUniform(_))
    }

    /// True for kernels with a count-data neighbourhood.
    pub fn supports_counts(&self) -> bool {
        matches!(self, Self::DiscreteUniform(_) | Self::ScaledTopHat(_))
    }

    /// Half-width of the support around `y`; infinite for the Gaussian kernel.
    pub fn half_width(&self, y: T) -> T {
        match *self {
            Self::Gaussian(_) => T::infinity(),
            Self::TopHat(d) | Self::DiscreteUniform(d) => d,
            Self::ScaledTopHat(d) => {
                if y > T::zero() {
                    y.sqrt() * d
                } else {
                    d
                }
            }
        }
    }

    /// Log kernel density in `ỹ` for continuous data.
    pub fn log_density(&self, y: T, y_tilde: T) -> T {
        match *self {
            Self::Gaussian(d) => normal_log_pdf(y_tilde, y, d * d),
            Self::TopHat(_) | Self::ScaledTopHat(_) => {
                let h = self.half_width(y);
                if (y_tilde - y).abs() < h {
                    -(T::lit(2.0) * h).ln()
                } else {
                    T::neg_infinity()
                }
            }
            Self::DiscreteUniform(_) => {
                let (Some(yc), Some(tc)) = (as_count(y), as_count(y_tilde)) else {
                    return T::neg_infinity();
                };
                self.log_mass(yc, tc)
            }
        }
    }

    /// Integer neighbourhood `[lo, hi]` of an observed count, or `None` for
    /// kernels without a count form.
    pub fn neighbourhood(&self, y: u64) -> Option<(u64, u64)> {
        if !self.supports_counts() {
            return None;
        }
        let yf = T::from_u64(y).expect("count representable");
        let h = self.half_width(yf);
        let hi = (yf + h).floor().to_u64().unwrap_or(u64::MAX);
        let lo_f = (yf - h).ceil();
        let lo = if lo_f <= T::zero() { 0 } else { lo_f.to_u64().unwrap_or(0) };
        Some((lo, hi))
    }

    /// `|𝒱(y, δ)|`.
    pub fn neighbourhood_size(&self, y: u64) -> Option<u64> {
        self.neighbourhood(y).map(|(lo, hi)| hi - lo + 1)
    }

    /// Log kernel mass at `ỹ` for count data.
    pub fn log_mass(&self, y: u64, y_tilde: u64) -> T {
        match self.neighbourhood(y) {
            Some((lo, hi)) if (lo..=hi).contains(&y_tilde) => {
                -T::from_u64(hi - lo + 1).expect("count representable").ln()
            }
            _ => T::neg_infinity(),
        }
    }
}

fn as_count<T: Scalar>(x: T) -> Option<u64> {
    if x >= T::zero() && x.fract() == T::zero() {
        x.to_u64()
    } else {
        None
    }
}

/// Exact kernel weight `1/|𝒱(y, δ)|` in any numeric type, e.g. a rational,
/// for normalization checks.
pub fn discrete_uniform_weight<R>(y: u64, y_tilde: u64, delta: f64) -> R
where
    R: num_traits::Num + num_traits::FromPrimitive,
{
    let kernel = KernelSpec::DiscreteUniform(delta);
    match kernel.neighbourhood(y) {
        Some((lo, hi)) if (lo..=hi).contains(&y_tilde) => {
            R::one() / R::from_u64(hi - lo + 1).expect("count representable")
        }
        _ => R::zero(),
    }
}

/// Per-observation smoothed log-likelihood of a continuous observation by
/// adaptive quadrature of `p(ỹ) K_δ(y, ỹ)`.
///
/// `log_density` is `ỹ ↦ log p(ỹ | φ, θ̃)`.
pub fn smoothed_loglik_quadrature<T, F>(
    log_density: F,
    y: T,
    kernel: &KernelSpec<T>,
    budget: QuadratureBudget,
) -> Result<T>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    kernel.validate()?;
    if kernel.is_discrete() {
        return Err(SmiError::SmoothingNotAvailable {
            kernel: kernel.name().into(),
            reason: "count kernel applied to continuous data".into(),
        });
    }
    let h = match kernel {
        KernelSpec::Gaussian(d) => T::lit(12.0) * *d,
        _ => kernel.half_width(y),
    };
    integrate_log(|t| log_density(t) + kernel.log_density(y, t), y - h, y + h, budget)
}

/// Gaussian-kernel smoothed log-likelihood `Σ_i log p_δ(Y_i | φ, θ̃)`.
///
/// When `closed_form` is given (for a normal observation model it is
/// `N(Y_i; m_i, σ² + δ²)`) it is used; otherwise each point is integrated
/// numerically with `pointwise`, which maps `(i, ỹ)` to `log p(ỹ | φ, θ̃)` for
/// the i-th observation's covariates.
pub fn smoothed_loglik_gaussian<T, P, C>(
    pointwise: P,
    ys: &[T],
    delta: T,
    closed_form: Option<C>,
    budget: QuadratureBudget,
) -> Result<T>
where
    T: Scalar,
    P: Fn(usize, T) -> T,
    C: Fn(usize, T) -> T,
{
    let kernel = KernelSpec::Gaussian(delta);
    kernel.validate()?;
    let mut total = T::zero();
    for (i, &y) in ys.iter().enumerate() {
        total = total
            + match &closed_form {
                Some(cf) => cf(i, y),
                None => smoothed_loglik_quadrature(|t| pointwise(i, t), y, &kernel, budget)?,
            };
    }
    Ok(total)
}

/// Closed form of the smoothed log-likelihood for a normal observation
/// model `N(mean, variance)` under a Gaussian kernel.
pub fn normal_smoothed_loglik<T: Scalar>(y: T, mean: T, variance: T, delta: T) -> T {
    normal_log_pdf(y, mean, variance + delta * delta)
}

/// Smoothed Poisson log-likelihood of one count under a count kernel:
/// `log{[F(𝒱₊ | μ) − F(𝒱₋ − 1 | μ)] / |𝒱|}` with `F` the Poisson CDF.
pub fn smoothed_poisson_loglik_kernel<T: Scalar>(y: u64, mean: T, kernel: &KernelSpec<T>) -> Result<T> {
    let (lo, hi) = kernel.neighbourhood(y).ok_or_else(|| SmiError::SmoothingNotAvailable {
        kernel: kernel.name().into(),
        reason: "kernel has no count neighbourhood".into(),
    })?;
    if !(mean > T::zero()) {
        return Ok(T::neg_infinity());
    }
    if lo == hi {
        return Ok(poisson_ln_pmf(lo, mean));
    }
    let size = T::from_u64(hi - lo + 1).expect("count representable");
    Ok(poisson_ln_interval(lo, hi, mean) - size.ln())
}

/// Smoothed Poisson log-likelihood with the discrete-uniform kernel of
/// bandwidth `delta`.
pub fn smoothed_poisson_loglik<T: Scalar>(y: u64, mean: T, delta: T) -> T {
    let kernel = KernelSpec::DiscreteUniform(delta);
    smoothed_poisson_loglik_kernel(y, mean, &kernel).unwrap_or(T::neg_infinity())
}

/// Smoothed log-likelihood of a count by explicit summation of `log_pmf`
/// over the kernel neighbourhood.
pub fn smoothed_count_loglik_enumerated<T, F>(log_pmf: F, y: u64, kernel: &KernelSpec<T>) -> Result<T>
where
    T: Scalar,
    F: Fn(u64) -> T,
{
    let (lo, hi) = kernel.neighbourhood(y).ok_or_else(|| SmiError::SmoothingNotAvailable {
        kernel: kernel.name().into(),
        reason: "kernel has no count neighbourhood".into(),
    })?;
    let terms: Vec<T> = (lo..=hi).map(&log_pmf).collect();
    Ok(log_sum_exp(&terms) - T::from_u64(hi - lo + 1).expect("count representable").ln())
}

/// Enumeration oracle for the Poisson case (used in tests and diagnostics).
pub fn smoothed_poisson_loglik_enumerated<T: Scalar>(y: u64, mean: T, kernel: &KernelSpec<T>) -> Result<T> {
    smoothed_count_loglik_enumerated(|k| poisson_ln_pmf(k, mean), y, kernel)
}
