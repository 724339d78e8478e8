use rand::Rng;

use crate::closed_form::RegressionConfig;
use crate::error::Result;
use crate::kernels::{normal_smoothed_loglik, KernelSpec};
use crate::model::{generic_smoothed_y_loglik_pointwise, Dims, Observation, TwoModuleModel};
use crate::scalar::{normal_log_pdf, Scalar};

/// One analysis-module observation `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionObs<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Observation<T> for RegressionObs<T> {
    fn response(&self) -> T {
        self.y
    }

    fn with_response(&self, value: T) -> Self {
        Self { x: self.x, y: value }
    }
}

/// Fitted model `Y_i ~ N(φ + θx_i, σ_y²)`, `Z_j ~ N(φ, σ_z²)`, flat priors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionModel<T> {
    pub sigma_y: T,
    pub sigma_z: T,
}

impl<T: Scalar> RegressionModel<T> {
    pub fn from_config(cfg: &RegressionConfig<T>) -> Self {
        Self {
            sigma_y: cfg.sigma_y,
            sigma_z: cfg.sigma_z,
        }
    }

    /// Draw `(X, Y, Z)` from the true model `Y_i ~ N(φ* + θ*X_i^k, σ_y²)`
    /// with `X_i ~ U(lo, hi)`.
    pub fn simulate<R: Rng + ?Sized>(
        cfg: &RegressionConfig<T>,
        x_range: (T, T),
        rng: &mut R,
    ) -> (Vec<T>, Vec<T>, Vec<T>) {
        let (lo, hi) = x_range;
        let xs: Vec<T> = (0..cfg.n).map(|_| lo + (hi - lo) * T::unit_uniform(rng)).collect();
        let ys = xs
            .iter()
            .map(|&x| cfg.phi_true + cfg.theta_true * x.powf(cfg.k) + cfg.sigma_y * T::standard_normal(rng))
            .collect();
        let zs = (0..cfg.m)
            .map(|_| cfg.phi_true + cfg.sigma_z * T::standard_normal(rng))
            .collect();
        (xs, ys, zs)
    }

    pub fn observations(xs: &[T], ys: &[T]) -> Vec<RegressionObs<T>> {
        xs.iter().zip(ys).map(|(&x, &y)| RegressionObs { x, y }).collect()
    }
}

impl<T: Scalar> TwoModuleModel<T> for RegressionModel<T> {
    type YObs = RegressionObs<T>;
    type ZObs = T;

    fn dims(&self) -> Dims {
        Dims { phi: 1, theta: 1, y: 1, z: 1 }
    }

    fn z_loglik_pointwise(&self, phi: &[T], z: &T) -> T {
        normal_log_pdf(*z, phi[0], self.sigma_z * self.sigma_z)
    }

    fn y_loglik_pointwise(&self, phi: &[T], theta: &[T], obs: &RegressionObs<T>) -> T {
        normal_log_pdf(obs.y, phi[0] + theta[0] * obs.x, self.sigma_y * self.sigma_y)
    }

    fn log_prior_phi(&self, _phi: &[T]) -> T {
        T::zero()
    }

    fn log_prior_theta_given_phi(&self, _theta: &[T], _phi: &[T]) -> T {
        T::zero()
    }

    fn theta_prior_is_proper(&self) -> bool {
        false
    }

    /// `∫ p(Y | φ, θ) dθ` under the flat prior: the Gaussian integral of the
    /// least-squares residual in θ.
    fn log_marginal_y_closed_form(&self, phi: &[T], ys: &[RegressionObs<T>]) -> Option<T> {
        let sy2 = self.sigma_y * self.sigma_y;
        let n = T::from_usize_lossy(ys.len());
        let sxx: T = ys.iter().map(|o| o.x * o.x).sum();
        if !(sxx > T::zero()) {
            return None;
        }
        let sxr: T = ys.iter().map(|o| o.x * (o.y - phi[0])).sum();
        let srr: T = ys.iter().map(|o| (o.y - phi[0]) * (o.y - phi[0])).sum();
        let rss = srr - sxr * sxr / sxx;
        let half = T::lit(0.5);
        Some(-half * n * (T::TAU() * sy2).ln() - rss / (T::lit(2.0) * sy2) + half * (T::TAU() * sy2 / sxx).ln())
    }

    fn smoothed_y_loglik_pointwise(
        &self,
        phi: &[T],
        theta: &[T],
        obs: &RegressionObs<T>,
        kernel: &KernelSpec<T>,
    ) -> Result<T> {
        match kernel {
            KernelSpec::Gaussian(d) => Ok(normal_smoothed_loglik(
                obs.y,
                phi[0] + theta[0] * obs.x,
                self.sigma_y * self.sigma_y,
                *d,
            )),
            _ => generic_smoothed_y_loglik_pointwise(self, phi, theta, obs, kernel),
        }
    }
}
