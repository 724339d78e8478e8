//! Biased-data example: `Z_j ~ N(φ, σ_z²)`, `Y_i ~ N(φ + θ, σ_y²)`, flat
//! prior on φ and `θ ~ N(0, σ_θ²)`.

use serde::{Deserialize, Serialize};

use super::{expected_log_normal_2d, Bandwidth, ConditionalGaussian, GaussianPosterior, NormalParams};
use crate::error::{Result, SmiError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasedDataConfig<T> {
    pub n: usize,
    pub m: usize,
    pub sigma_y: T,
    pub sigma_z: T,
    pub sigma_theta: T,
    pub phi_true: T,
    pub theta_true: T,
    pub y_bar: T,
    pub z_bar: T,
}

impl<T: Scalar> BiasedDataConfig<T> {
    /// `n = 50`, `m = 25`, `σ_y = 1`, `σ_z = 2`, `σ_θ = 0.33`, `φ* = 0`,
    /// `θ* = 1`; sample means start at zero.
    pub fn standard() -> Self {
        Self {
            n: 50,
            m: 25,
            sigma_y: T::one(),
            sigma_z: T::lit(2.0),
            sigma_theta: T::lit(0.33),
            phi_true: T::zero(),
            theta_true: T::one(),
            y_bar: T::zero(),
            z_bar: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(SmiError::InvalidConfig("n and m must be >= 1".into()));
        }
        for (name, v) in [
            ("sigma_y", self.sigma_y),
            ("sigma_z", self.sigma_z),
            ("sigma_theta", self.sigma_theta),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(SmiError::InvalidConfig(format!("{name} must be a positive number, got {v}")));
            }
        }
        Ok(())
    }

    /// Replace sizes and sample means with those of `(ys, zs)`.
    pub fn with_data(&self, ys: &[T], zs: &[T]) -> Self {
        Self {
            n: ys.len(),
            m: zs.len(),
            y_bar: mean(ys),
            z_bar: mean(zs),
            ..*self
        }
    }

    fn nf(&self) -> T {
        T::from_usize_lossy(self.n)
    }

    fn mf(&self) -> T {
        T::from_usize_lossy(self.m)
    }
}

fn mean<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len())
}

fn phi_from_lambda<T: Scalar>(cfg: &BiasedDataConfig<T>, lambda: T) -> NormalParams<T> {
    NormalParams {
        mean: lambda * cfg.z_bar + (T::one() - lambda) * cfg.y_bar,
        variance: lambda * cfg.sigma_z * cfg.sigma_z / cfg.mf(),
    }
}

/// `λ = (m/σ_z²) / (m/σ_z² + n/(σ_y² + δ² + nσ_θ²))`; exactly 1 at `δ = ∞`.
pub fn biased_lambda<T: Scalar>(cfg: &BiasedDataConfig<T>, delta: Bandwidth<T>) -> T {
    match delta.squared() {
        None => T::one(),
        Some(d2) => {
            let a = cfg.mf() / (cfg.sigma_z * cfg.sigma_z);
            let b = cfg.nf() / (cfg.sigma_y * cfg.sigma_y + d2 + cfg.nf() * cfg.sigma_theta * cfg.sigma_theta);
            a / (a + b)
        }
    }
}

/// δ-SMI marginal of φ: `N(λZ̄ + (1−λ)Ȳ, λσ_z²/m)`.
pub fn biased_phi_posterior<T: Scalar>(cfg: &BiasedDataConfig<T>, delta: Bandwidth<T>) -> NormalParams<T> {
    phi_from_lambda(cfg, biased_lambda(cfg, delta))
}

/// `ρ = σ_θ² / (σ_θ² + σ_y²/n)`.
pub fn biased_rho<T: Scalar>(cfg: &BiasedDataConfig<T>) -> T {
    let s2 = cfg.sigma_theta * cfg.sigma_theta;
    s2 / (s2 + cfg.sigma_y * cfg.sigma_y / cfg.nf())
}

/// `θ | Y, φ ~ N(ρ(Ȳ − φ), (1 − ρ)σ_θ²)` as a function of φ.
pub fn biased_theta_conditional<T: Scalar>(cfg: &BiasedDataConfig<T>) -> ConditionalGaussian<T> {
    let rho = biased_rho(cfg);
    ConditionalGaussian {
        intercept: rho * cfg.y_bar,
        slope: -rho,
        variance: (T::one() - rho) * cfg.sigma_theta * cfg.sigma_theta,
    }
}

pub fn biased_theta_given_phi<T: Scalar>(cfg: &BiasedDataConfig<T>, phi: T) -> NormalParams<T> {
    biased_theta_conditional(cfg).at(phi)
}

pub fn biased_smi_posterior<T: Scalar>(cfg: &BiasedDataConfig<T>, delta: Bandwidth<T>) -> GaussianPosterior<T> {
    let lambda = biased_lambda(cfg, delta);
    GaussianPosterior {
        phi: phi_from_lambda(cfg, lambda),
        theta_given_phi: biased_theta_conditional(cfg),
        lambda,
        rho: biased_rho(cfg),
    }
}

/// η-SMI posterior computed from the power likelihood `p(Y|φ,θ̃)^η`:
/// the Y-side precision of φ becomes `n / (σ_y²/η + nσ_θ²)`.
pub fn biased_eta_posterior<T: Scalar>(cfg: &BiasedDataConfig<T>, eta: T) -> Result<GaussianPosterior<T>> {
    if !(eta >= T::zero() && eta <= T::one()) {
        return Err(SmiError::InvalidSetting(format!("eta must lie in [0, 1], got {eta}")));
    }
    let a = cfg.mf() / (cfg.sigma_z * cfg.sigma_z);
    let b = if eta == T::zero() {
        T::zero()
    } else {
        cfg.nf() / (cfg.sigma_y * cfg.sigma_y / eta + cfg.nf() * cfg.sigma_theta * cfg.sigma_theta)
    };
    let lambda = a / (a + b);
    Ok(GaussianPosterior {
        phi: phi_from_lambda(cfg, lambda),
        theta_given_phi: biased_theta_conditional(cfg),
        lambda,
        rho: biased_rho(cfg),
    })
}

/// `η = σ_y² / (σ_y² + δ²)`; 0 at `δ = ∞`.
pub fn eta_from_delta<T: Scalar>(sigma_y: T, delta: Bandwidth<T>) -> T {
    match delta.squared() {
        None => T::zero(),
        Some(d2) => {
            let s2 = sigma_y * sigma_y;
            s2 / (s2 + d2)
        }
    }
}

/// Inverse of [`eta_from_delta`] on `η ∈ [0, 1]`.
pub fn delta_from_eta<T: Scalar>(sigma_y: T, eta: T) -> Result<Bandwidth<T>> {
    if !(eta >= T::zero() && eta <= T::one()) {
        return Err(SmiError::InvalidSetting(format!("eta must lie in [0, 1], got {eta}")));
    }
    if eta == T::zero() {
        return Ok(Bandwidth::Infinite);
    }
    Ok(Bandwidth::Finite(sigma_y * ((T::one() - eta) / eta).sqrt()))
}

/// Which covariance the joint predictive of a new `(y, z)` pair uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictiveForm {
    /// `Var(y) = (1−ρ)²σ_δ² + σ²_{θ|Y,φ} + σ_y²`, the variance of
    /// `y = (1−ρ)φ + ρȲ + ε_θ + ε_y`.
    #[default]
    Exact,
    /// `Var(y) = (1−ρ)σ_δ² + σ²_{θ|Y,φ} + σ_y²`.
    Printed,
}

/// Mean and covariance of the bivariate normal predictive for `(y, z)`.
pub fn biased_predictive<T: Scalar>(
    cfg: &BiasedDataConfig<T>,
    delta: Bandwidth<T>,
    form: PredictiveForm,
) -> ([T; 2], [[T; 2]; 2]) {
    let post = biased_smi_posterior(cfg, delta);
    let rho = post.rho;
    let one_minus = T::one() - rho;
    let s2d = post.phi.variance;
    let mean = [one_minus * post.phi.mean + rho * cfg.y_bar, post.phi.mean];
    let phi_term = match form {
        PredictiveForm::Exact => one_minus * one_minus * s2d,
        PredictiveForm::Printed => one_minus * s2d,
    };
    let cov = [
        [
            phi_term + post.theta_given_phi.variance + cfg.sigma_y * cfg.sigma_y,
            one_minus * s2d,
        ],
        [one_minus * s2d, s2d + cfg.sigma_z * cfg.sigma_z],
    ];
    (mean, cov)
}

/// Exact `ELPD_{y,z}(δ) = E_{p*} log p_δ(y, z | Y, Z)` with
/// `p* = N(θ* + φ*, σ_y²) ⊗ N(φ*, σ_z²)`.
pub fn exact_elpd_biased<T: Scalar>(cfg: &BiasedDataConfig<T>, delta: Bandwidth<T>, form: PredictiveForm) -> Result<T> {
    let (mean, cov) = biased_predictive(cfg, delta, form);
    let zero = T::zero();
    let true_mean = [cfg.theta_true + cfg.phi_true, cfg.phi_true];
    let true_cov = [[cfg.sigma_y * cfg.sigma_y, zero], [zero, cfg.sigma_z * cfg.sigma_z]];
    expected_log_normal_2d(mean, cov, true_mean, true_cov)
}

/// Posterior mean squared errors `(E[(φ−φ*)²], E[(θ−θ*)²])`.
pub fn biased_pmse<T: Scalar>(cfg: &BiasedDataConfig<T>, delta: Bandwidth<T>) -> (T, T) {
    let post = biased_smi_posterior(cfg, delta);
    (
        post.phi.mean_squared_error(cfg.phi_true),
        post.theta_marginal().mean_squared_error(cfg.theta_true),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_at_standard_settings() {
        let cfg = BiasedDataConfig::<f64>::standard();
        let l = biased_lambda(&cfg, Bandwidth::zero());
        let expected = 6.25 / (6.25 + 50.0 / (1.0 + 50.0 * 0.1089));
        assert!((l - expected).abs() < 1e-15);
        assert_eq!(biased_lambda(&cfg, Bandwidth::Infinite), 1.0);
    }

    #[test]
    fn eta_for_delta_three_and_a_half() {
        let eta = eta_from_delta(1.0_f64, Bandwidth::Finite(3.5));
        assert!((eta - 1.0 / 13.25).abs() < 1e-15);
        for d in [0.1, 1.0, 10.0] {
            let back = delta_from_eta(1.0_f64, eta_from_delta(1.0, Bandwidth::Finite(d))).unwrap();
            assert!((back.value() - d).abs() < 1e-12);
        }
        assert_eq!(delta_from_eta(1.0_f64, 0.0).unwrap(), Bandwidth::Infinite);
    }

    #[test]
    fn cut_limit_is_z_only() {
        let cfg = BiasedDataConfig {
            z_bar: 0.4,
            y_bar: 1.3,
            ..BiasedDataConfig::<f64>::standard()
        };
        let p = biased_phi_posterior(&cfg, Bandwidth::Infinite);
        assert_eq!(p.mean, 0.4);
        assert_eq!(p.variance, 4.0 / 25.0);
    }

    #[test]
    fn printed_and_exact_forms_differ_only_in_y_variance() {
        let cfg = BiasedDataConfig {
            y_bar: 1.0,
            z_bar: 0.1,
            ..BiasedDataConfig::<f64>::standard()
        };
        let (m1, c1) = biased_predictive(&cfg, Bandwidth::Finite(2.0), PredictiveForm::Exact);
        let (m2, c2) = biased_predictive(&cfg, Bandwidth::Finite(2.0), PredictiveForm::Printed);
        assert_eq!(m1, m2);
        assert_eq!(c1[0][1], c2[0][1]);
        assert_eq!(c1[1][1], c2[1][1]);
        assert!(c1[0][0] < c2[0][0]);
    }
}
