//! Misspecified regression example: fitted `Y_i ~ N(φ + θX_i, σ_y²)`,
//! `Z_j ~ N(φ, σ_z²)` with flat priors; truth `Y_i ~ N(φ* + θ*X_i^k, σ_y²)`.

use serde::{Deserialize, Serialize};

use super::{Bandwidth, ConditionalGaussian, GaussianPosterior, NormalParams};
use crate::error::{Result, SmiError};
use crate::scalar::Scalar;

/// Population moments `M_{X^r} = E[X^r]` of the covariate distribution.
pub trait CovariateMoments<T: Scalar> {
    fn moment(&self, r: T) -> T;
}

/// `X ~ U(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformCovariate<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> CovariateMoments<T> for UniformCovariate<T> {
    fn moment(&self, r: T) -> T {
        let r1 = r + T::one();
        (self.hi.powf(r1) - self.lo.powf(r1)) / (r1 * (self.hi - self.lo))
    }
}

impl<T: Scalar, F: Fn(T) -> T> CovariateMoments<T> for F {
    fn moment(&self, r: T) -> T {
        self(r)
    }
}

/// The four moments the pseudo-true values need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationMoments<T> {
    pub m1: T,
    pub m2: T,
    pub mk: T,
    pub mk1: T,
}

impl<T: Scalar> PopulationMoments<T> {
    pub fn from_distribution<D: CovariateMoments<T> + ?Sized>(dist: &D, k: T) -> Result<Self> {
        let out = Self {
            m1: dist.moment(T::one()),
            m2: dist.moment(T::lit(2.0)),
            mk: dist.moment(k),
            mk1: dist.moment(k + T::one()),
        };
        if out.m2 < out.m1 * out.m1 {
            return Err(SmiError::InvalidConfig("population moments give negative variance".into()));
        }
        Ok(out)
    }

    pub fn variance(&self) -> T {
        self.m2 - self.m1 * self.m1
    }
}

/// Sample moments `x̄`, `x̄²`, `x̄y`, `ȳ`, `z̄`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RegressionStats<T> {
    pub x_bar: T,
    pub x2_bar: T,
    pub xy_bar: T,
    pub y_bar: T,
    pub z_bar: T,
}

impl<T: Scalar> RegressionStats<T> {
    pub fn from_data(xs: &[T], ys: &[T], zs: &[T]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(SmiError::DimensionMismatch(format!("{} covariates for {} responses", xs.len(), ys.len())));
        }
        let n = T::from_usize_lossy(xs.len().max(1));
        let m = T::from_usize_lossy(zs.len().max(1));
        Ok(Self {
            x_bar: xs.iter().copied().sum::<T>() / n,
            x2_bar: xs.iter().map(|&x| x * x).sum::<T>() / n,
            xy_bar: xs.iter().zip(ys).map(|(&x, &y)| x * y).sum::<T>() / n,
            y_bar: ys.iter().copied().sum::<T>() / n,
            z_bar: zs.iter().copied().sum::<T>() / m,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionConfig<T> {
    pub n: usize,
    pub m: usize,
    pub sigma_y: T,
    pub sigma_z: T,
    pub k: T,
    pub phi_true: T,
    pub theta_true: T,
    pub stats: RegressionStats<T>,
    pub population: PopulationMoments<T>,
}

impl<T: Scalar> RegressionConfig<T> {
    /// `n = m = 50`, `σ_y = 0.25`, `σ_z = 3`, `X ~ U(0, 2)`, `φ* = 0`,
    /// `θ* = 1`.
    pub fn standard(k: T) -> Self {
        let cov = UniformCovariate {
            lo: T::zero(),
            hi: T::lit(2.0),
        };
        Self {
            n: 50,
            m: 50,
            sigma_y: T::lit(0.25),
            sigma_z: T::lit(3.0),
            k,
            phi_true: T::zero(),
            theta_true: T::one(),
            stats: RegressionStats::default(),
            population: PopulationMoments::from_distribution(&cov, k).expect("uniform moments are valid"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(SmiError::InvalidConfig("n and m must be >= 1".into()));
        }
        if !(self.sigma_y > T::zero() && self.sigma_z > T::zero()) {
            return Err(SmiError::InvalidConfig("noise scales must be positive".into()));
        }
        if !(self.k > T::zero()) {
            return Err(SmiError::InvalidConfig(format!("k must be positive, got {}", self.k)));
        }
        Ok(())
    }

    pub fn alpha(&self) -> T {
        T::from_usize_lossy(self.m) / T::from_usize_lossy(self.n)
    }

    pub fn with_data(&self, xs: &[T], ys: &[T], zs: &[T]) -> Result<Self> {
        Ok(Self {
            n: ys.len(),
            m: zs.len(),
            stats: RegressionStats::from_data(xs, ys, zs)?,
            ..*self
        })
    }
}

/// `ρ = (σ_y² + δ²)/σ_z² · m/n`; infinite at `δ = ∞`.
pub fn regression_rho<T: Scalar>(cfg: &RegressionConfig<T>, delta: Bandwidth<T>) -> T {
    match delta.squared() {
        None => T::infinity(),
        Some(d2) => (cfg.sigma_y * cfg.sigma_y + d2) / (cfg.sigma_z * cfg.sigma_z) * cfg.alpha(),
    }
}

/// δ-SMI posterior (φ marginal and θ | φ).
pub fn regression_smi_posterior<T: Scalar>(cfg: &RegressionConfig<T>, delta: Bandwidth<T>) -> Result<GaussianPosterior<T>> {
    let s = &cfg.stats;
    if !(s.x2_bar > T::zero()) {
        return Err(SmiError::DegenerateCovariates);
    }
    let m = T::from_usize_lossy(cfg.m);
    let n = T::from_usize_lossy(cfg.n);
    let sz2 = cfg.sigma_z * cfg.sigma_z;
    let c = T::one() - s.x_bar * s.x_bar / s.x2_bar;
    let rho = regression_rho(cfg, delta);
    let (phi, lambda) = if rho.is_infinite() {
        (
            NormalParams {
                mean: s.z_bar,
                variance: sz2 / m,
            },
            T::one(),
        )
    } else {
        let denom = rho + c;
        (
            NormalParams {
                mean: (rho * s.z_bar + s.y_bar - s.x_bar * s.xy_bar / s.x2_bar) / denom,
                variance: (rho * sz2 / m) / denom,
            },
            rho / denom,
        )
    };
    Ok(GaussianPosterior {
        phi,
        theta_given_phi: ConditionalGaussian {
            intercept: s.xy_bar / s.x2_bar,
            slope: -s.x_bar / s.x2_bar,
            variance: cfg.sigma_y * cfg.sigma_y / (n * s.x2_bar),
        },
        lambda,
        rho,
    })
}

/// Posterior predictive for a new `z`: `N(μ̃_φ, σ̃_φ² + σ_z²)`.
pub fn regression_z_predictive<T: Scalar>(cfg: &RegressionConfig<T>, delta: Bandwidth<T>) -> Result<NormalParams<T>> {
    let post = regression_smi_posterior(cfg, delta)?;
    Ok(NormalParams {
        mean: post.phi.mean,
        variance: post.phi.variance + cfg.sigma_z * cfg.sigma_z,
    })
}

/// Exact `ELPD_z(δ) = E_{z ~ N(φ*, σ_z²)} log p̃_δ(z | Y, Z)`.
pub fn exact_elpd_z_regression<T: Scalar>(cfg: &RegressionConfig<T>, delta: Bandwidth<T>) -> Result<T> {
    let pred = regression_z_predictive(cfg, delta)?;
    let d = pred.mean - cfg.phi_true;
    let sz2 = cfg.sigma_z * cfg.sigma_z;
    Ok(-T::lit(0.5) * (T::TAU() * pred.variance).ln() - (sz2 + d * d) / (T::lit(2.0) * pred.variance))
}

/// `log p̃_δ(Z_j | Y, Z_{−j})` for every `j`, from the closed form with
/// `m − 1` Z-observations.
pub fn regression_loo_log_predictive<T: Scalar>(cfg: &RegressionConfig<T>, zs: &[T], delta: Bandwidth<T>) -> Result<Vec<T>> {
    if zs.len() < 2 {
        return Err(SmiError::TooFewObservations { min: 2, got: zs.len() });
    }
    let m = zs.len();
    let total: T = zs.iter().copied().sum();
    let mf1 = T::from_usize_lossy(m - 1);
    zs.iter()
        .map(|&zj| {
            let fold = RegressionConfig {
                m: m - 1,
                stats: RegressionStats {
                    z_bar: (total - zj) / mf1,
                    ..cfg.stats
                },
                ..*cfg
            };
            Ok(regression_z_predictive(&fold, delta)?.log_pdf(zj))
        })
        .collect()
}

/// `(φ*_δ, θ*_δ)`, the large-sample limits of the cut-MLEs.
pub fn pseudo_true_values<T: Scalar>(cfg: &RegressionConfig<T>, delta: Bandwidth<T>) -> (T, T) {
    let p = &cfg.population;
    let phi = match delta.squared() {
        None => cfg.phi_true,
        Some(d2) => {
            let num = p.m2 * p.mk - p.m1 * p.mk1;
            let den = p.variance() + cfg.alpha() * p.m2 * (cfg.sigma_y * cfg.sigma_y + d2) / (cfg.sigma_z * cfg.sigma_z);
            cfg.phi_true + cfg.theta_true * num / den
        }
    };
    let theta = (cfg.theta_true * p.mk1 + p.m1 * cfg.phi_true - p.m1 * phi) / p.m2;
    (phi, theta)
}
