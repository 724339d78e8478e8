use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::stats::{effective_sample_size, mean, variance};

/// Retained draws of `(φ, θ̃, θ)` from one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws<T> {
    pub setting: String,
    pub seed: u64,
    pub chain_id: u64,
    pub phi: Vec<Vec<T>>,
    /// Absent for settings without an auxiliary θ̃ (Cut, full Bayes).
    pub theta_tilde: Option<Vec<Vec<T>>>,
    pub theta: Vec<Vec<T>>,
    /// Augmented responses `Ỹ`, kept by the augmented sampler only.
    pub y_tilde: Option<Vec<Vec<T>>>,
    /// `(block name, acceptance rate)` over the post-burn-in iterations.
    pub acceptance: Vec<(String, f64)>,
}

impl<T: Scalar> PosteriorDraws<T> {
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn phi_column(&self, j: usize) -> Vec<T> {
        self.phi.iter().map(|d| d[j]).collect()
    }

    pub fn theta_column(&self, j: usize) -> Vec<T> {
        self.theta.iter().map(|d| d[j]).collect()
    }

    pub fn theta_tilde_column(&self, j: usize) -> Option<Vec<T>> {
        self.theta_tilde.as_ref().map(|t| t.iter().map(|d| d[j]).collect())
    }

    /// Named columns in CSV order.
    pub fn columns(&self) -> Vec<(String, Vec<T>)> {
        let mut out = Vec::new();
        let dp = self.phi.first().map_or(0, Vec::len);
        let dt = self.theta.first().map_or(0, Vec::len);
        for j in 0..dp {
            out.push((format!("phi_{j}"), self.phi_column(j)));
        }
        if self.theta_tilde.is_some() {
            for j in 0..dt {
                out.push((format!("theta_tilde_{j}"), self.theta_tilde_column(j).unwrap_or_default()));
            }
        }
        for j in 0..dt {
            out.push((format!("theta_{j}"), self.theta_column(j)));
        }
        out
    }

    /// ESS per column, clamped to the number of draws. A constant column
    /// reports 1.
    pub fn ess(&self) -> Vec<(String, f64)> {
        let n = self.len() as f64;
        self.columns()
            .into_iter()
            .map(|(name, col)| {
                let e = effective_sample_size(&col).map(|e| e.min(n)).unwrap_or(1.0);
                (name, e)
            })
            .collect()
    }

    pub fn min_ess(&self) -> f64 {
        self.ess().into_iter().map(|(_, e)| e).fold(f64::INFINITY, f64::min)
    }

    /// `(mean, variance, Monte Carlo SE of the mean)` of a column.
    pub fn summary(col: &[T]) -> (f64, f64, f64) {
        let m = mean(col).to_f64_lossy();
        let v = variance(col).to_f64_lossy();
        let ess = effective_sample_size(col).unwrap_or(1.0).min(col.len() as f64);
        (m, v, (v / ess).sqrt())
    }

    /// CSV with columns `chain, iter, phi_*, theta_tilde_*, theta_*`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let cols = self.columns();
        let header: Vec<String> = ["chain".to_string(), "iter".to_string()]
            .into_iter()
            .chain(cols.iter().map(|(n, _)| n.clone()))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.len() {
            write!(w, "{},{}", self.chain_id, i)?;
            for (_, c) in &cols {
                write!(w, ",{}", c[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
