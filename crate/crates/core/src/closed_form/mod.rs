//! Conjugate posteriors, predictive densities and pseudo-true values for the
//! two Gaussian examples.

pub mod biased;
pub mod regression;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmiError};
use crate::scalar::{normal_log_pdf, Scalar};

pub use biased::*;
pub use regression::*;

/// Smoothing bandwidth with an explicit infinite tag, so the Cut limit is
/// evaluated analytically rather than through a huge float.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth<T> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> Bandwidth<T> {
    /// `+inf` maps to `Infinite`; negative or NaN values are rejected.
    pub fn new(delta: T) -> Result<Self> {
        if delta.is_nan() || delta < T::zero() {
            return Err(SmiError::InvalidSetting(format!("bandwidth must be >= 0, got {delta}")));
        }
        Ok(if delta.is_infinite() { Self::Infinite } else { Self::Finite(delta) })
    }

    pub fn zero() -> Self {
        Self::Finite(T::zero())
    }

    pub fn value(&self) -> T {
        match self {
            Self::Finite(d) => *d,
            Self::Infinite => T::infinity(),
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinite)
    }

    /// `δ²`, or `None` at infinity.
    pub fn squared(&self) -> Option<T> {
        match self {
            Self::Finite(d) => Some(*d * *d),
            Self::Infinite => None,
        }
    }
}

/// Univariate normal `N(mean, variance)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams<T> {
    pub mean: T,
    pub variance: T,
}

impl<T: Scalar> NormalParams<T> {
    pub fn sd(&self) -> T {
        self.variance.sqrt()
    }

    pub fn log_pdf(&self, x: T) -> T {
        normal_log_pdf(x, self.mean, self.variance)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.mean + self.sd() * T::standard_normal(rng)
    }

    /// Expected squared distance to `truth`: `σ² + (μ − truth)²`.
    pub fn mean_squared_error(&self, truth: T) -> T {
        let b = self.mean - truth;
        self.variance + b * b
    }
}

/// `θ | φ ~ N(intercept + slope·φ, variance)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalGaussian<T> {
    pub intercept: T,
    pub slope: T,
    pub variance: T,
}

impl<T: Scalar> ConditionalGaussian<T> {
    pub fn at(&self, phi: T) -> NormalParams<T> {
        NormalParams {
            mean: self.intercept + self.slope * phi,
            variance: self.variance,
        }
    }
}

/// Closed-form candidate posterior `N(φ; μ, σ²) · N(θ; a + bφ, v)`.
///
/// `lambda` is the weight the posterior mean of φ puts on `Z̄`; `rho` is
/// the shrinkage/balance constant of the respective example (infinite for
/// the regression example's Cut limit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPosterior<T> {
    pub phi: NormalParams<T>,
    pub theta_given_phi: ConditionalGaussian<T>,
    pub lambda: T,
    pub rho: T,
}

impl<T: Scalar> GaussianPosterior<T> {
    pub fn theta_marginal(&self) -> NormalParams<T> {
        let c = &self.theta_given_phi;
        NormalParams {
            mean: c.intercept + c.slope * self.phi.mean,
            variance: c.variance + c.slope * c.slope * self.phi.variance,
        }
    }

    pub fn covariance_phi_theta(&self) -> T {
        self.theta_given_phi.slope * self.phi.variance
    }

    /// One joint draw `(φ, θ)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (T, T) {
        let phi = self.phi.sample(rng);
        let theta = self.theta_given_phi.at(phi).sample(rng);
        (phi, theta)
    }
}

/// Inverse and log-determinant of a symmetric 2×2 matrix.
pub(crate) fn inverse_2x2<T: Scalar>(m: [[T; 2]; 2]) -> Result<([[T; 2]; 2], T)> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(m[0][0] > T::zero()) || !(det > T::zero()) {
        return Err(SmiError::NotPositiveDefinite(format!(
            "2x2 matrix with diagonal ({}, {}) and determinant {}",
            m[0][0], m[1][1], det
        )));
    }
    let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
    Ok((inv, det.ln()))
}

/// `E_{x ~ N(μ*, Σ*)} log N(x; μ, Σ)` for bivariate normals.
pub fn expected_log_normal_2d<T: Scalar>(
    mean: [T; 2],
    cov: [[T; 2]; 2],
    true_mean: [T; 2],
    true_cov: [[T; 2]; 2],
) -> Result<T> {
    let (inv, log_det) = inverse_2x2(cov)?;
    let mut trace = T::zero();
    for i in 0..2 {
        for j in 0..2 {
            trace = trace + inv[i][j] * true_cov[j][i];
        }
    }
    let d = [true_mean[0] - mean[0], true_mean[1] - mean[1]];
    let quad = d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1]) + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1]);
    Ok(-T::TAU().ln() - T::lit(0.5) * log_det - T::lit(0.5) * (trace + quad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_tags_infinity() {
        assert_eq!(Bandwidth::new(f64::INFINITY).unwrap(), Bandwidth::Infinite);
        assert_eq!(Bandwidth::new(2.0).unwrap().squared(), Some(4.0));
        assert!(Bandwidth::new(-1.0).is_err());
        assert!(Bandwidth::new(f64::NAN).is_err());
    }

    #[test]
    fn expected_log_density_at_truth_is_negative_entropy() {
        let cov = [[2.0, 0.3], [0.3, 1.0]];
        let v = expected_log_normal_2d([0.0, 0.0], cov, [0.0, 0.0], cov).unwrap();
        let det: f64 = 2.0 - 0.09;
        let entropy = 1.0 + std::f64::consts::TAU.ln() + 0.5 * det.ln();
        assert!((v + entropy).abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_covariance() {
        assert!(expected_log_normal_2d([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]], [0.0; 2], [[1.0, 0.0], [0.0, 1.0]]).is_err());
    }
}
