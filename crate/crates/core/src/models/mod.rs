//! Concrete two-module models used by the examples.

pub mod biased;
pub mod hpv;
pub mod regression;

pub use biased::BiasedNormalModel;
pub use hpv::{HpvCount, HpvModel, HpvRecord, HpvSurvey};
pub use regression::{RegressionModel, RegressionObs};
