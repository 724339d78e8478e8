//! Two-module models, influence settings and the loss functions whose Gibbs
//! posteriors are the Bayes, Cut and semi-modular belief updates.
//!
//! The imputation module is `p(Z | φ)`; the analysis module is
//! `p(Y | φ, θ)`. Everything is kept in log space.

use std::fmt::Debug;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmiError};
use crate::kernels::{smoothed_count_loglik_enumerated, smoothed_loglik_quadrature, KernelSpec};
use crate::quadrature::{integrate_log, QuadratureBudget};
use crate::scalar::{log_sum_exp, Scalar};

/// Parameter and data dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub phi: usize,
    pub theta: usize,
    pub y: usize,
    pub z: usize,
}

/// A single observation of the analysis module. The response can be
/// replaced, which is what kernel smoothing and data augmentation need.
pub trait Observation<T: Scalar>: Clone + Debug + Send + Sync {
    fn response(&self) -> T;
    fn with_response(&self, value: T) -> Self;

    /// Count-valued responses are smoothed with count kernels.
    fn is_count() -> bool {
        false
    }
}

impl<T: Scalar> Observation<T> for T {
    fn response(&self) -> T {
        *self
    }
    fn with_response(&self, value: T) -> Self {
        value
    }
}

/// Joint specification `p(Z | φ)`, `p(Y | φ, θ)`, `π(φ, θ)` as log-densities.
///
/// Log-densities return `-inf` off their support. `Y` and `Z` are
/// conditionally independent given the parameters, so the dataset
/// log-likelihoods default to sums over observations.
pub trait TwoModuleModel<T: Scalar>: Send + Sync {
    type YObs: Observation<T>;
    type ZObs: Clone + Debug + Send + Sync;

    fn dims(&self) -> Dims;

    fn z_loglik_pointwise(&self, phi: &[T], z: &Self::ZObs) -> T;

    fn y_loglik_pointwise(&self, phi: &[T], theta: &[T], y: &Self::YObs) -> T;

    fn z_loglik(&self, phi: &[T], zs: &[Self::ZObs]) -> T {
        sum_finite(zs.iter().map(|z| self.z_loglik_pointwise(phi, z)))
    }

    fn y_loglik(&self, phi: &[T], theta: &[T], ys: &[Self::YObs]) -> T {
        sum_finite(ys.iter().map(|y| self.y_loglik_pointwise(phi, theta, y)))
    }

    fn log_prior_phi(&self, phi: &[T]) -> T;

    fn log_prior_theta_given_phi(&self, theta: &[T], phi: &[T]) -> T;

    fn log_prior(&self, phi: &[T], theta: &[T]) -> T {
        self.log_prior_phi(phi) + self.log_prior_theta_given_phi(theta, phi)
    }

    /// False when `π(θ | φ)` is improper (e.g. flat); generic marginalisation over
    /// θ is then refused.
    fn theta_prior_is_proper(&self) -> bool {
        true
    }

    /// Registered closed form of `log p(Y | φ) = log ∫ p(Y|φ,θ) π(θ|φ) dθ`.
    fn log_marginal_y_closed_form(&self, _phi: &[T], _ys: &[Self::YObs]) -> Option<T> {
        None
    }

    /// `log p_δ(y | φ, θ)` for one observation. The default integrates
    /// (continuous responses) or sums (count responses) the pointwise
    /// density against the kernel; models override it with closed forms.
    fn smoothed_y_loglik_pointwise(
        &self,
        phi: &[T],
        theta: &[T],
        y: &Self::YObs,
        kernel: &KernelSpec<T>,
    ) -> Result<T> {
        generic_smoothed_y_loglik_pointwise(self, phi, theta, y, kernel)
    }

    fn smoothed_y_loglik(&self, phi: &[T], theta: &[T], ys: &[Self::YObs], kernel: &KernelSpec<T>) -> Result<T> {
        let mut total = T::zero();
        for y in ys {
            let v = self.smoothed_y_loglik_pointwise(phi, theta, y, kernel)?;
            if v == T::neg_infinity() {
                return Ok(v);
            }
            total = total + v;
        }
        Ok(total)
    }

    /// Starting point `(φ, θ)` for samplers.
    fn initial_params(&self) -> (Vec<T>, Vec<T>) {
        let d = self.dims();
        (vec![T::zero(); d.phi], vec![T::zero(); d.theta])
    }

    /// Coordinate blocks of φ updated jointly by the samplers.
    fn phi_blocks(&self) -> Vec<Range<usize>> {
        vec![0..self.dims().phi]
    }
}

/// Smoothed pointwise log-likelihood by kernel quadrature (continuous
/// responses) or enumeration over the neighbourhood (count responses).
pub fn generic_smoothed_y_loglik_pointwise<T, M>(
    model: &M,
    phi: &[T],
    theta: &[T],
    y: &M::YObs,
    kernel: &KernelSpec<T>,
) -> Result<T>
where
    T: Scalar,
    M: TwoModuleModel<T> + ?Sized,
{
    if M::YObs::is_count() {
        let count = y
            .response()
            .to_u64()
            .ok_or_else(|| SmiError::InvalidConfig(format!("count response {} is not a count", y.response())))?;
        smoothed_count_loglik_enumerated(
            |k| {
                let value = T::from_u64(k).expect("count representable");
                model.y_loglik_pointwise(phi, theta, &y.with_response(value))
            },
            count,
            kernel,
        )
    } else {
        smoothed_loglik_quadrature(
            |t| model.y_loglik_pointwise(phi, theta, &y.with_response(t)),
            y.response(),
            kernel,
            QuadratureBudget::default(),
        )
    }
}

fn sum_finite<T: Scalar>(terms: impl Iterator<Item = T>) -> T {
    let mut acc = T::zero();
    for t in terms {
        if t == T::neg_infinity() {
            return t;
        }
        acc = acc + t;
    }
    acc
}

/// Which candidate posterior is meant.
///
/// Use the constructors: they validate the parameter and map the endpoint
/// values onto `Bayes` (η = 1, γ = 1, δ = 0) and `Cut` (η = 0, γ = 0,
/// δ = ∞). The raw variants stay constructible for loss-level work.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InfluenceSetting<T> {
    Bayes,
    Cut,
    Eta { eta: T },
    Delta { kernel: KernelSpec<T> },
    Gamma { gamma: T },
}

impl<T: Scalar> InfluenceSetting<T> {
    pub fn bayes() -> Self {
        Self::Bayes
    }

    pub fn cut() -> Self {
        Self::Cut
    }

    pub fn eta(eta: T) -> Result<Self> {
        check_unit("eta", eta)?;
        Ok(Self::Eta { eta }.normalized())
    }

    pub fn gamma(gamma: T) -> Result<Self> {
        check_unit("gamma", gamma)?;
        Ok(Self::Gamma { gamma }.normalized())
    }

    pub fn delta(kernel: KernelSpec<T>) -> Result<Self> {
        let d = kernel.bandwidth();
        if d.is_nan() || d < T::zero() {
            return Err(SmiError::InvalidSetting(format!("delta must be >= 0, got {d}")));
        }
        let setting = Self::Delta { kernel }.normalized();
        if let Self::Delta { kernel } = &setting {
            kernel.validate()?;
        }
        Ok(setting)
    }

    /// Map endpoint parameter values onto `Bayes`/`Cut`.
    pub fn normalized(self) -> Self {
        match self {
            Self::Eta { eta } if eta == T::one() => Self::Bayes,
            Self::Eta { eta } if eta == T::zero() => Self::Cut,
            Self::Gamma { gamma } if gamma == T::one() => Self::Bayes,
            Self::Gamma { gamma } if gamma == T::zero() => Self::Cut,
            Self::Delta { kernel } if kernel.bandwidth() == T::zero() => Self::Bayes,
            Self::Delta { kernel } if kernel.bandwidth().is_infinite() => Self::Cut,
            other => other,
        }
    }

    /// True when the belief update carries the auxiliary θ̃.
    pub fn uses_theta_tilde(&self) -> bool {
        matches!(self, Self::Eta { .. } | Self::Delta { .. })
    }

    pub fn label(&self) -> String {
        match self {
            Self::Bayes => "bayes".into(),
            Self::Cut => "cut".into(),
            Self::Eta { eta } => format!("eta={eta}"),
            Self::Delta { kernel } => format!("delta={}({})", kernel.bandwidth(), kernel.name()),
            Self::Gamma { gamma } => format!("gamma={gamma}"),
        }
    }
}

fn check_unit<T: Scalar>(name: &str, v: T) -> Result<()> {
    if v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(SmiError::InvalidSetting(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// `(φ, θ̃, θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedParams<T> {
    pub phi: Vec<T>,
    pub theta_tilde: Vec<T>,
    pub theta: Vec<T>,
}

impl<T: Scalar> AugmentedParams<T> {
    pub fn new(dims: Dims, phi: Vec<T>, theta_tilde: Vec<T>, theta: Vec<T>) -> Result<Self> {
        if phi.len() != dims.phi || theta_tilde.len() != dims.theta || theta.len() != dims.theta {
            return Err(SmiError::DimensionMismatch(format!(
                "expected phi {} / theta {}, got phi {} / theta_tilde {} / theta {}",
                dims.phi,
                dims.theta,
                phi.len(),
                theta_tilde.len(),
                theta.len()
            )));
        }
        Ok(Self { phi, theta_tilde, theta })
    }
}

/// How `log p(Y | φ)` is obtained.
#[derive(Debug, Clone)]
pub enum MarginalEvaluator<T> {
    /// The model's registered closed form.
    ClosedForm,
    /// Finite θ support; `log π(θ | φ)` must be normalized over it.
    Enumeration { thetas: Vec<Vec<T>> },
    /// One-dimensional θ integrated over `[lower, upper]`.
    Quadrature { lower: T, upper: T, budget: QuadratureBudget },
}

impl<T: Scalar> MarginalEvaluator<T> {
    pub fn log_marginal_y<M>(&self, model: &M, phi: &[T], ys: &[M::YObs]) -> Result<T>
    where
        M: TwoModuleModel<T> + ?Sized,
    {
        if ys.is_empty() {
            return Ok(T::zero());
        }
        match self {
            Self::ClosedForm => model
                .log_marginal_y_closed_form(phi, ys)
                .ok_or_else(|| SmiError::MarginalNotAvailable("model registers no closed form".into())),
            Self::Enumeration { thetas } => {
                let terms: Vec<T> = thetas
                    .iter()
                    .map(|th| model.log_prior_theta_given_phi(th, phi) + model.y_loglik(phi, th, ys))
                    .collect();
                Ok(log_sum_exp(&terms))
            }
            Self::Quadrature { lower, upper, budget } => {
                if model.dims().theta != 1 {
                    return Err(SmiError::MarginalNotAvailable(
                        "quadrature marginal needs a scalar theta".into(),
                    ));
                }
                if !model.theta_prior_is_proper() {
                    return Err(SmiError::MarginalNotAvailable(
                        "prior on theta is improper and no closed form is registered".into(),
                    ));
                }
                integrate_log(
                    |t| {
                        let th = [t];
                        model.log_prior_theta_given_phi(&th, phi) + model.y_loglik(phi, &th, ys)
                    },
                    *lower,
                    *upper,
                    *budget,
                )
            }
        }
    }
}

/// Bayes loss `−log p(Z | φ) − log p(Y | φ, θ)`; `+inf` if either
/// likelihood vanishes.
pub fn bayes_loss<T, M>(model: &M, phi: &[T], theta: &[T], ys: &[M::YObs], zs: &[M::ZObs]) -> T
where
    T: Scalar,
    M: TwoModuleModel<T> + ?Sized,
{
    let lz = model.z_loglik(phi, zs);
    if lz == T::neg_infinity() {
        return T::infinity();
    }
    let ly = model.y_loglik(phi, theta, ys);
    if ly == T::neg_infinity() {
        return T::infinity();
    }
    -lz - ly
}

/// Cut loss: Bayes loss plus `log p(Y | φ)`.
pub fn cut_loss<T, M>(
    model: &M,
    phi: &[T],
    theta: &[T],
    ys: &[M::YObs],
    zs: &[M::ZObs],
    marginal: &MarginalEvaluator<T>,
) -> Result<T>
where
    T: Scalar,
    M: TwoModuleModel<T> + ?Sized,
{
    let lb = bayes_loss(model, phi, theta, ys, zs);
    if ys.is_empty() {
        return Ok(lb);
    }
    let lm = marginal.log_marginal_y(model, phi, ys)?;
    Ok(finite_or_inf(lb + lm, lb))
}

/// Loss whose Gibbs posterior is the candidate posterior named by `setting`.
///
/// * Bayes: `l_b(φ, θ)`
/// * Cut: `l_b(φ, θ) + log p(Y|φ)`
/// * Eta: `l_b(φ, θ) − η log p(Y|φ, θ̃) + log p(Y|φ)`
/// * Delta: `l_b(φ, θ) − log p_δ(Y|φ, θ̃) + log p(Y|φ)`
/// * Gamma: `l_b(φ, θ) + (1 − γ) log p(Y|φ)`
pub fn smi_loss<T, M>(
    model: &M,
    setting: &InfluenceSetting<T>,
    params: &AugmentedParams<T>,
    ys: &[M::YObs],
    zs: &[M::ZObs],
    marginal: &MarginalEvaluator<T>,
) -> Result<T>
where
    T: Scalar,
    M: TwoModuleModel<T> + ?Sized,
{
    let phi = &params.phi;
    let lb = bayes_loss(model, phi, &params.theta, ys, zs);
    let log_marg = |model: &M| -> Result<T> {
        if ys.is_empty() {
            Ok(T::zero())
        } else {
            marginal.log_marginal_y(model, phi, ys)
        }
    };
    let value = match setting {
        InfluenceSetting::Bayes => return Ok(lb),
        InfluenceSetting::Cut => lb + log_marg(model)?,
        InfluenceSetting::Gamma { gamma } => lb + (T::one() - *gamma) * log_marg(model)?,
        InfluenceSetting::Eta { eta } => {
            let tilde = if *eta == T::zero() {
                T::zero()
            } else {
                let l = model.y_loglik(phi, &params.theta_tilde, ys);
                if l == T::neg_infinity() {
                    return Ok(T::infinity());
                }
                *eta * l
            };
            lb - tilde + log_marg(model)?
        }
        InfluenceSetting::Delta { kernel } => {
            let l = model.smoothed_y_loglik(phi, &params.theta_tilde, ys, kernel)?;
            if l == T::neg_infinity() {
                return Ok(T::infinity());
            }
            lb - l + log_marg(model)?
        }
    };
    Ok(finite_or_inf(value, lb))
}

fn finite_or_inf<T: Scalar>(value: T, lb: T) -> T {
    if lb == T::infinity() || value.is_nan() {
        T::infinity()
    } else {
        value
    }
}
