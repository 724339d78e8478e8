//! Semi-modular inference for two-module Bayesian models.

pub mod closed_form;
pub mod coherence;
pub mod error;
pub mod kernels;
mod linalg;
pub mod model;
pub mod models;
pub mod quadrature;
pub mod sampler;
pub mod scalar;
pub mod selection;
pub mod special;
pub mod stats;

pub use error::{Result, SmiError};
pub use kernels::KernelSpec;
pub use model::{AugmentedParams, Dims, InfluenceSetting, MarginalEvaluator, Observation, TwoModuleModel};
pub use scalar::Scalar;

pub type Setting = InfluenceSetting<f64>;
pub type Kernel = KernelSpec<f64>;
pub type Bandwidth = closed_form::Bandwidth<f64>;
pub type GaussianPosterior = closed_form::GaussianPosterior<f64>;
pub type BiasedDataConfig = closed_form::BiasedDataConfig<f64>;
pub type RegressionConfig = closed_form::RegressionConfig<f64>;
pub type BiasedNormalModel = models::BiasedNormalModel<f64>;
pub type RegressionModel = models::RegressionModel<f64>;
pub type HpvModel = models::HpvModel<f64>;
pub type PosteriorDraws = sampler::PosteriorDraws<f64>;
pub type UtilityCurve = selection::UtilityCurve<f64>;
pub type DiscreteModel = coherence::DiscreteModel<f64>;

pub type SettingF32 = InfluenceSetting<f32>;
pub type BiasedDataConfigF32 = closed_form::BiasedDataConfig<f32>;
pub type PosteriorDrawsF32 = sampler::PosteriorDraws<f32>;
