use thiserror::Error;

/// Errors raised by the inference routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmiError {
    #[error("marginal likelihood p(Y|phi) is not available: {0}")]
    MarginalNotAvailable(String),

    #[error("smoothed likelihood is not available for kernel {kernel}: {reason}")]
    SmoothingNotAvailable { kernel: String, reason: String },

    #[error("quadrature did not converge (achieved error estimate {achieved:e}, requested {requested:e})")]
    QuadratureFailed { achieved: f64, requested: f64 },

    #[error("invalid influence parameter: {0}")]
    InvalidSetting(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate covariates: mean of x^2 is zero")]
    DegenerateCovariates,

    #[error("covariance is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("sequence too short for ESS: {len} < {min}")]
    SequenceTooShort { len: usize, min: usize },

    #[error("sequence is constant; effective sample size undefined")]
    DegenerateSequence,

    #[error("zero acceptance during burn-in; proposal scales: {scales}")]
    ZeroAcceptance { scales: String },

    #[error("belief update produced zero total mass")]
    ZeroMass,

    #[error("not enough observations: need at least {min}, got {got}")]
    TooFewObservations { min: usize, got: usize },

    #[error("utility ranges do not overlap: reference [{ref_lo}, {ref_hi}], other [{other_lo}, {other_hi}]")]
    NonOverlappingRanges {
        ref_lo: f64,
        ref_hi: f64,
        other_lo: f64,
        other_hi: f64,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, SmiError>;
