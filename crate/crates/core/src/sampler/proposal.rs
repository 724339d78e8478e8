use rand::Rng;

use crate::linalg::cholesky;
use crate::scalar::Scalar;

const COVARIANCE_START: usize = 200;
const COVARIANCE_EVERY: usize = 100;

/// Gaussian random-walk proposal for one parameter block.
///
/// During adaptation the log-scale follows a Robbins–Monro recursion
/// towards the target acceptance rate (0.44 for scalars, 0.234 otherwise)
/// and the shape follows the empirical covariance of the visited states.
#[derive(Debug, Clone)]
pub struct RandomWalkBlock {
    dim: usize,
    log_scale: f64,
    shape: Vec<f64>,
    target: f64,
    adapt_step: usize,
    count: usize,
    mean: Vec<f64>,
    comoment: Vec<f64>,
    learn_shape: bool,
    pub proposed: u64,
    pub accepted: u64,
}

impl RandomWalkBlock {
    pub fn new(dim: usize, scale: f64) -> Self {
        let mut shape = vec![0.0; dim * dim];
        for i in 0..dim {
            shape[i * dim + i] = 1.0;
        }
        Self {
            dim,
            log_scale: scale.ln(),
            shape,
            target: if dim == 1 { 0.44 } else { 0.234 },
            adapt_step: 0,
            count: 0,
            mean: vec![0.0; dim],
            comoment: vec![0.0; dim * dim],
            learn_shape: true,
            proposed: 0,
            accepted: 0,
        }
    }

    /// Scalar block whose scale adapts but whose shape stays fixed.
    pub fn scale_only(scale: f64) -> Self {
        Self {
            learn_shape: false,
            ..Self::new(1, scale)
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// Propose `current + scale · L ξ` into `out`.
    pub fn propose<T: Scalar, R: Rng + ?Sized>(&self, current: &[T], out: &mut [T], rng: &mut R) {
        let d = self.dim;
        let s = self.scale();
        let xi: Vec<f64> = (0..d).map(|_| f64::standard_normal(rng)).collect();
        for i in 0..d {
            let step: f64 = (0..=i).map(|j| self.shape[i * d + j] * xi[j]).sum();
            out[i] = current[i] + T::lit(s * step);
        }
    }

    /// Record the outcome of one Metropolis step. `log_alpha` is the log
    /// acceptance ratio and `state` the post-step state.
    pub fn record<T: Scalar>(&mut self, accepted: bool, log_alpha: f64, state: &[T], adapting: bool) {
        self.proposed += 1;
        if accepted {
            self.accepted += 1;
        }
        if !adapting {
            return;
        }
        self.adapt_step += 1;
        let alpha = if log_alpha.is_nan() { 0.0 } else { log_alpha.min(0.0).exp() };
        let gain = (self.adapt_step as f64).powf(-0.6);
        self.log_scale = (self.log_scale + gain * (alpha - self.target)).clamp(-30.0, 10.0);
        if !self.learn_shape {
            return;
        }
        self.count += 1;
        let n = self.count as f64;
        let x: Vec<f64> = state.iter().map(|v| v.to_f64_lossy()).collect();
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        for (m, dv) in self.mean.iter_mut().zip(&delta) {
            *m += dv / n;
        }
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                self.comoment[i * d + j] += delta[i] * (x[j] - self.mean[j]);
            }
        }
        if self.count >= COVARIANCE_START && self.count % COVARIANCE_EVERY == 0 {
            self.refresh_shape();
        }
    }

    fn refresh_shape(&mut self) {
        let d = self.dim;
        let n = self.count as f64;
        let mut cov: Vec<f64> = self.comoment.iter().map(|c| c / (n - 1.0)).collect();
        let jitter = 1e-10 * (0..d).map(|i| cov[i * d + i]).fold(0.0, f64::max).max(1e-300);
        for i in 0..d {
            cov[i * d + i] += jitter;
        }
        if let Some(l) = cholesky(&cov, d) {
            // Rescale so the current overall scale keeps its meaning.
            let old = (0..d).map(|i| self.shape[i * d + i]).product::<f64>().powf(1.0 / d as f64);
            let new = (0..d).map(|i| l[i * d + i]).product::<f64>().powf(1.0 / d as f64);
            if old > 0.0 && new > 0.0 {
                self.log_scale += (old / new).ln();
            }
            self.shape = l;
        }
    }
}
