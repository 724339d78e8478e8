//! Finite two-module models with outcome-index data.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmiError};
use crate::scalar::Scalar;

const NORMALIZATION_TOL: f64 = 1e-12;

/// `p(z | φ)`, `p(y | φ, θ)` and `π₀(φ, θ)` on finite grids. Observations
/// are outcome indices `0..n_z` and `0..n_y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteModel<T> {
    pub p_z: Vec<Vec<T>>,
    pub p_y: Vec<Vec<Vec<T>>>,
    pub prior: Vec<Vec<T>>,
}

/// Conditionally iid data `(Y, Z)` as outcome indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteData {
    pub ys: Vec<usize>,
    pub zs: Vec<usize>,
}

impl DiscreteData {
    pub fn new(ys: Vec<usize>, zs: Vec<usize>) -> Self {
        Self { ys, zs }
    }

    pub fn len(&self) -> usize {
        self.ys.len() + self.zs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<T: Scalar> DiscreteModel<T> {
    pub fn new(p_z: Vec<Vec<T>>, p_y: Vec<Vec<Vec<T>>>, prior: Vec<Vec<T>>) -> Result<Self> {
        let model = Self { p_z, p_y, prior };
        model.validate()?;
        Ok(model)
    }

    pub fn n_phi(&self) -> usize {
        self.prior.len()
    }

    pub fn n_theta(&self) -> usize {
        self.prior.first().map_or(0, Vec::len)
    }

    pub fn n_y(&self) -> usize {
        self.p_y.first().and_then(|r| r.first()).map_or(0, Vec::len)
    }

    pub fn n_z(&self) -> usize {
        self.p_z.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let (np, nt) = (self.n_phi(), self.n_theta());
        if np == 0 || nt == 0 || self.n_y() == 0 || self.n_z() == 0 {
            return Err(SmiError::InvalidConfig("empty grid".into()));
        }
        if self.p_z.len() != np || self.p_y.len() != np || self.prior.iter().any(|r| r.len() != nt) {
            return Err(SmiError::DimensionMismatch("tables disagree on |Φ| or |Θ|".into()));
        }
        if self.p_z.iter().any(|r| r.len() != self.n_z())
            || self.p_y.iter().any(|r| r.len() != nt || r.iter().any(|c| c.len() != self.n_y()))
        {
            return Err(SmiError::DimensionMismatch("ragged outcome tables".into()));
        }
        if self.prior.iter().flatten().any(|&p| !(p > T::zero())) {
            return Err(SmiError::InvalidConfig("prior must be strictly positive".into()));
        }
        let rows = self.p_z.iter().chain(self.p_y.iter().flatten());
        for row in rows.chain(std::iter::once(&self.prior.concat())) {
            if row.iter().any(|&p| p < T::zero() || !p.is_finite()) {
                return Err(SmiError::InvalidConfig("negative or non-finite probability".into()));
            }
            let s: T = row.iter().copied().sum();
            if (s - T::one()).abs().to_f64_lossy() > NORMALIZATION_TOL {
                return Err(SmiError::InvalidConfig(format!("table row sums to {s}")));
            }
        }
        Ok(())
    }

    /// Random model with Dirichlet(1) rows and grid sizes drawn from
    /// `2..=max_size`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_size: usize) -> Self {
        let max_size = max_size.max(2);
        let size = |rng: &mut R| rng.random_range(2..=max_size);
        let (np, nt, ny, nz) = (size(rng), size(rng), size(rng), size(rng));
        let p_z = (0..np).map(|_| dirichlet_row(rng, nz)).collect();
        let p_y = (0..np).map(|_| (0..nt).map(|_| dirichlet_row(rng, ny)).collect()).collect();
        let flat = dirichlet_row(rng, np * nt);
        let prior = flat.chunks(nt).map(<[T]>::to_vec).collect();
        Self { p_z, p_y, prior }
    }

    /// Data drawn from the model at a parameter drawn from the prior, with
    /// at most `max_obs` observations in total (at least one).
    pub fn random_data<R: Rng + ?Sized>(&self, rng: &mut R, max_obs: usize) -> DiscreteData {
        let total = rng.random_range(1..=max_obs.max(1));
        let n_y = rng.random_range(0..=total);
        let flat: Vec<T> = self.prior.concat();
        let cell = draw_index(rng, &flat);
        let (phi, theta) = (cell / self.n_theta(), cell % self.n_theta());
        DiscreteData {
            ys: (0..n_y).map(|_| draw_index(rng, &self.p_y[phi][theta])).collect(),
            zs: (0..total - n_y).map(|_| draw_index(rng, &self.p_z[phi])).collect(),
        }
    }

    pub fn log_prior_phi(&self, phi: usize) -> T {
        self.prior[phi].iter().copied().sum::<T>().ln()
    }

    pub fn log_prior_theta_given_phi(&self, phi: usize, theta: usize) -> T {
        self.prior[phi][theta].ln() - self.log_prior_phi(phi)
    }

    pub fn log_p_z(&self, phi: usize, zs: &[usize]) -> T {
        zs.iter().map(|&z| self.p_z[phi][z].ln()).sum()
    }

    pub fn log_p_y(&self, phi: usize, theta: usize, ys: &[usize]) -> T {
        ys.iter().map(|&y| self.p_y[phi][theta][y].ln()).sum()
    }
}

fn dirichlet_row<T: Scalar, R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<T> {
    let raw: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1).max(1e-3)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|&x| T::lit(x / s)).collect()
}

fn draw_index<T: Scalar, R: Rng + ?Sized>(rng: &mut R, probs: &[T]) -> usize {
    let u = T::unit_uniform(rng);
    let mut acc = T::zero();
    for (i, &p) in probs.iter().enumerate() {
        acc = acc + p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}
