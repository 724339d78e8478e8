use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmiError};
use crate::kernels::{smoothed_poisson_loglik_kernel, KernelSpec};
use crate::model::{Dims, Observation, TwoModuleModel};
use crate::scalar::{normal_log_pdf, Scalar};
use crate::special::{binomial_ln_pmf, poisson_ln_pmf};

/// One population row: cancer cases over `person_years` of follow-up and
/// `ninf` HPV-positive women out of `npart` sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpvRecord {
    pub pop_id: String,
    pub ncases: u64,
    pub person_years: f64,
    pub ninf: u64,
    pub npart: u64,
}

impl HpvRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.person_years > 0.0) || !self.person_years.is_finite() {
            return Err(SmiError::InvalidConfig(format!(
                "population {}: person_years must be positive, got {}",
                self.pop_id, self.person_years
            )));
        }
        if self.ninf > self.npart {
            return Err(SmiError::InvalidConfig(format!(
                "population {}: ninf {} exceeds npart {}",
                self.pop_id, self.ninf, self.npart
            )));
        }
        Ok(())
    }
}

/// Poisson observation `Y_i` with exposure `T_i` (thousands of women-years).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpvCount<T> {
    pub index: usize,
    pub cases: T,
    pub exposure: T,
}

impl<T: Scalar> Observation<T> for HpvCount<T> {
    fn response(&self) -> T {
        self.cases
    }

    fn with_response(&self, value: T) -> Self {
        Self { cases: value, ..*self }
    }

    fn is_count() -> bool {
        true
    }
}

/// Binomial observation `Z_i ~ Binomial(N_i, φ_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HpvSurvey {
    pub index: usize,
    pub positives: u64,
    pub sample_size: u64,
}

/// `Y_i ~ Poisson(T_i exp(θ₁ + θ₂φ_i))`, `Z_i ~ Binomial(N_i, φ_i)`,
/// `φ_i ~ U(0, 1)`, `θ_j ~ N(0, s²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HpvModel<T> {
    pub populations: usize,
    pub theta_prior_sd: T,
    initial_phi: Vec<T>,
    initial_theta: Vec<T>,
}

impl<T: Scalar> HpvModel<T> {
    pub const DEFAULT_THETA_PRIOR_SD: f64 = 100.0;

    /// Build the model and its two datasets. Samplers start at the
    /// empirical prevalences and a Poisson log-linear fit of the rates.
    pub fn from_records(records: &[HpvRecord]) -> Result<(Self, Vec<HpvCount<T>>, Vec<HpvSurvey>)> {
        if records.is_empty() {
            return Err(SmiError::TooFewObservations { min: 1, got: 0 });
        }
        for r in records {
            r.validate()?;
        }
        let ys: Vec<HpvCount<T>> = records
            .iter()
            .enumerate()
            .map(|(index, r)| HpvCount {
                index,
                cases: T::from_u64(r.ncases).expect("count representable"),
                exposure: T::lit(r.person_years / 1000.0),
            })
            .collect();
        let zs: Vec<HpvSurvey> = records
            .iter()
            .enumerate()
            .map(|(index, r)| HpvSurvey {
                index,
                positives: r.ninf,
                sample_size: r.npart,
            })
            .collect();
        let initial_phi: Vec<T> = records
            .iter()
            .map(|r| T::lit((r.ninf as f64 + 0.5) / (r.npart as f64 + 1.0)))
            .collect();
        let initial_theta = log_linear_start(&ys, &initial_phi);
        Ok((
            Self {
                populations: records.len(),
                theta_prior_sd: T::lit(Self::DEFAULT_THETA_PRIOR_SD),
                initial_phi,
                initial_theta,
            },
            ys,
            zs,
        ))
    }

    pub fn with_theta_prior_sd(mut self, sd: T) -> Self {
        self.theta_prior_sd = sd;
        self
    }

    pub fn rate(&self, phi: &[T], theta: &[T], y: &HpvCount<T>) -> T {
        y.exposure * (theta[0] + theta[1] * phi[y.index]).exp()
    }
}

// Least squares of log((Y_i + 0.5)/T_i) on φ_i.
fn log_linear_start<T: Scalar>(ys: &[HpvCount<T>], phi: &[T]) -> Vec<T> {
    let n = T::from_usize_lossy(ys.len());
    let lr: Vec<T> = ys.iter().map(|y| ((y.cases + T::lit(0.5)) / y.exposure).ln()).collect();
    let xb = phi.iter().copied().sum::<T>() / n;
    let yb = lr.iter().copied().sum::<T>() / n;
    let sxx: T = phi.iter().map(|&x| (x - xb) * (x - xb)).sum();
    let sxy: T = phi.iter().zip(&lr).map(|(&x, &y)| (x - xb) * (y - yb)).sum();
    let slope = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    vec![yb - slope * xb, slope]
}

fn count_of<T: Scalar>(v: T) -> Option<u64> {
    if v >= T::zero() && v.fract() == T::zero() {
        v.to_u64()
    } else {
        None
    }
}

impl<T: Scalar> TwoModuleModel<T> for HpvModel<T> {
    type YObs = HpvCount<T>;
    type ZObs = HpvSurvey;

    fn dims(&self) -> Dims {
        Dims {
            phi: self.populations,
            theta: 2,
            y: 1,
            z: 1,
        }
    }

    fn z_loglik_pointwise(&self, phi: &[T], z: &HpvSurvey) -> T {
        binomial_ln_pmf(z.positives, z.sample_size, phi[z.index])
    }

    fn y_loglik_pointwise(&self, phi: &[T], theta: &[T], y: &HpvCount<T>) -> T {
        match count_of(y.cases) {
            Some(k) => poisson_ln_pmf(k, self.rate(phi, theta, y)),
            None => T::neg_infinity(),
        }
    }

    fn log_prior_phi(&self, phi: &[T]) -> T {
        if phi.iter().all(|&p| p >= T::zero() && p <= T::one()) {
            T::zero()
        } else {
            T::neg_infinity()
        }
    }

    fn log_prior_theta_given_phi(&self, theta: &[T], _phi: &[T]) -> T {
        let v = self.theta_prior_sd * self.theta_prior_sd;
        theta.iter().map(|&t| normal_log_pdf(t, T::zero(), v)).sum()
    }

    fn smoothed_y_loglik_pointwise(&self, phi: &[T], theta: &[T], y: &HpvCount<T>, kernel: &KernelSpec<T>) -> Result<T> {
        let k = count_of(y.cases).ok_or_else(|| SmiError::InvalidConfig(format!("{} is not a count", y.cases)))?;
        smoothed_poisson_loglik_kernel(k, self.rate(phi, theta, y), kernel)
    }

    fn initial_params(&self) -> (Vec<T>, Vec<T>) {
        (self.initial_phi.clone(), self.initial_theta.clone())
    }

    fn phi_blocks(&self) -> Vec<Range<usize>> {
        (0..self.populations).map(|i| i..i + 1).collect()
    }
}
