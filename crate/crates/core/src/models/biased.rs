use rand::Rng;

use crate::closed_form::BiasedDataConfig;
use crate::error::Result;
use crate::kernels::{normal_smoothed_loglik, KernelSpec};
use crate::model::{generic_smoothed_y_loglik_pointwise, Dims, TwoModuleModel};
use crate::scalar::{normal_log_pdf, Scalar};

/// `Z_j ~ N(φ, σ_z²)`, `Y_i ~ N(φ + θ, σ_y²)`, flat `π(φ)`,
/// `θ ~ N(0, σ_θ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasedNormalModel<T> {
    pub sigma_y: T,
    pub sigma_z: T,
    pub sigma_theta: T,
}

impl<T: Scalar> BiasedNormalModel<T> {
    pub fn from_config(cfg: &BiasedDataConfig<T>) -> Self {
        Self {
            sigma_y: cfg.sigma_y,
            sigma_z: cfg.sigma_z,
            sigma_theta: cfg.sigma_theta,
        }
    }

    /// Draw `(Y, Z)` from the true parameters of `cfg`.
    pub fn simulate<R: Rng + ?Sized>(cfg: &BiasedDataConfig<T>, rng: &mut R) -> (Vec<T>, Vec<T>) {
        let ys = (0..cfg.n)
            .map(|_| cfg.phi_true + cfg.theta_true + cfg.sigma_y * T::standard_normal(rng))
            .collect();
        let zs = (0..cfg.m)
            .map(|_| cfg.phi_true + cfg.sigma_z * T::standard_normal(rng))
            .collect();
        (ys, zs)
    }
}

impl<T: Scalar> TwoModuleModel<T> for BiasedNormalModel<T> {
    type YObs = T;
    type ZObs = T;

    fn dims(&self) -> Dims {
        Dims { phi: 1, theta: 1, y: 1, z: 1 }
    }

    fn z_loglik_pointwise(&self, phi: &[T], z: &T) -> T {
        normal_log_pdf(*z, phi[0], self.sigma_z * self.sigma_z)
    }

    fn y_loglik_pointwise(&self, phi: &[T], theta: &[T], y: &T) -> T {
        normal_log_pdf(*y, phi[0] + theta[0], self.sigma_y * self.sigma_y)
    }

    fn log_prior_phi(&self, _phi: &[T]) -> T {
        T::zero()
    }

    fn log_prior_theta_given_phi(&self, theta: &[T], _phi: &[T]) -> T {
        normal_log_pdf(theta[0], T::zero(), self.sigma_theta * self.sigma_theta)
    }

    /// `Y ~ N_n(φ1, σ_y² I + σ_θ² 11ᵀ)`.
    fn log_marginal_y_closed_form(&self, phi: &[T], ys: &[T]) -> Option<T> {
        let n = T::from_usize_lossy(ys.len());
        let sy2 = self.sigma_y * self.sigma_y;
        let big = sy2 + n * self.sigma_theta * self.sigma_theta;
        let y_bar = ys.iter().copied().sum::<T>() / n;
        let ss: T = ys.iter().map(|&y| (y - y_bar) * (y - y_bar)).sum();
        let log_det = (n - T::one()) * sy2.ln() + big.ln();
        let d = y_bar - phi[0];
        let quad = ss / sy2 + n * d * d / big;
        Some(-T::lit(0.5) * (n * T::TAU().ln() + log_det + quad))
    }

    fn smoothed_y_loglik_pointwise(&self, phi: &[T], theta: &[T], y: &T, kernel: &KernelSpec<T>) -> Result<T> {
        match kernel {
            KernelSpec::Gaussian(d) => Ok(normal_smoothed_loglik(*y, phi[0] + theta[0], self.sigma_y * self.sigma_y, *d)),
            _ => generic_smoothed_y_loglik_pointwise(self, phi, theta, y, kernel),
        }
    }
}
