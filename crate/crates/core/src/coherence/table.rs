use serde::{Deserialize, Serialize};

use crate::error::{Result, SmiError};
use crate::scalar::{log_sum_exp, Scalar};

/// Values over the `(φ, θ̃, θ)` grid, stored φ-major. `n_tilde` is 1 for
/// updates without θ̃.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTable<T> {
    pub n_phi: usize,
    pub n_tilde: usize,
    pub n_theta: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> ParamTable<T> {
    pub fn from_fn(n_phi: usize, n_tilde: usize, n_theta: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(n_phi * n_tilde * n_theta);
        for p in 0..n_phi {
            for t in 0..n_tilde {
                for th in 0..n_theta {
                    values.push(f(p, t, th));
                }
            }
        }
        Self {
            n_phi,
            n_tilde,
            n_theta,
            values,
        }
    }

    #[inline]
    pub fn index(&self, phi: usize, tilde: usize, theta: usize) -> usize {
        (phi * self.n_tilde + tilde) * self.n_theta + theta
    }

    #[inline]
    pub fn get(&self, phi: usize, tilde: usize, theta: usize) -> T {
        self.values[self.index(phi, tilde, theta)]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        (self.n_phi, self.n_tilde, self.n_theta) == (other.n_phi, other.n_tilde, other.n_theta)
    }

    pub fn total(&self) -> T {
        self.values.iter().copied().sum()
    }

    /// Normalize a table of log weights into probabilities.
    pub fn from_log_weights(log_w: Self) -> Result<Self> {
        let lse = log_sum_exp(&log_w.values);
        if !lse.is_finite() {
            return Err(SmiError::ZeroMass);
        }
        Ok(Self {
            values: log_w.values.iter().map(|&l| (l - lse).exp()).collect(),
            ..log_w
        })
    }

    /// `(φ, θ)` marginal with θ̃ summed out.
    pub fn phi_theta_marginal(&self) -> Self {
        Self::from_fn(self.n_phi, 1, self.n_theta, |p, _, th| (0..self.n_tilde).map(|t| self.get(p, t, th)).sum())
    }

    /// `log q(θ | φ)` for each φ, with θ̃ summed out.
    pub fn log_theta_given_phi(&self) -> Result<Vec<Vec<T>>> {
        let m = self.phi_theta_marginal();
        (0..self.n_phi)
            .map(|p| {
                let row = &m.values[p * self.n_theta..(p + 1) * self.n_theta];
                let s: T = row.iter().copied().sum();
                if !(s > T::zero()) {
                    return Err(SmiError::ZeroMass);
                }
                Ok(row.iter().map(|&v| (v / s).ln()).collect())
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| if a == b { T::zero() } else { (a - b).abs() })
            .fold(T::zero(), T::max))
    }

    pub fn total_variation(&self, other: &Self) -> Result<T> {
        self.check_shape(other)?;
        Ok(T::lit(0.5) * self.values.iter().zip(&other.values).map(|(&a, &b)| (a - b).abs()).sum::<T>())
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(SmiError::DimensionMismatch(format!(
                "tables {}x{}x{} and {}x{}x{}",
                self.n_phi, self.n_tilde, self.n_theta, other.n_phi, other.n_tilde, other.n_theta
            )))
        }
    }
}
