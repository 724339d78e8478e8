use serde::{Deserialize, Serialize};

use crate::error::{Result, SmiError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    /// Outer iterations including burn-in.
    pub outer_steps: usize,
    /// Inner θ-chain iterations per outer iteration.
    pub inner_steps: usize,
    /// Fraction of the outer iterations discarded as burn-in.
    pub burn_in_fraction: f64,
    pub thin: usize,
    /// Starting random-walk scale for every block.
    pub initial_scale: f64,
    /// Starting scale for individual φ blocks (overrides `initial_scale`).
    pub phi_scales: Option<Vec<f64>>,
    /// Adapt proposal scales and shapes during burn-in.
    pub adapt: bool,
    pub seed: u64,
    pub chain_id: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            outer_steps: 20_000,
            inner_steps: 50,
            burn_in_fraction: 0.25,
            thin: 1,
            initial_scale: 0.1,
            phi_scales: None,
            adapt: true,
            seed: 0,
            chain_id: 0,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.outer_steps == 0 || self.inner_steps == 0 || self.thin == 0 {
            return Err(SmiError::InvalidConfig("step counts and thinning must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(SmiError::InvalidConfig(format!(
                "burn_in_fraction must lie in [0, 1), got {}",
                self.burn_in_fraction
            )));
        }
        let scales_ok = self.initial_scale > 0.0
            && self
                .phi_scales
                .as_ref()
                .is_none_or(|s| s.iter().all(|&v| v > 0.0 && v.is_finite()));
        if !scales_ok || !self.initial_scale.is_finite() {
            return Err(SmiError::InvalidConfig("proposal scales must be positive".into()));
        }
        if self.burn_iterations() >= self.outer_steps {
            return Err(SmiError::InvalidConfig("no iterations left after burn-in".into()));
        }
        Ok(())
    }

    pub fn burn_iterations(&self) -> usize {
        (self.outer_steps as f64 * self.burn_in_fraction).floor() as usize
    }

    pub fn retained(&self) -> usize {
        (self.outer_steps - self.burn_iterations()).div_ceil(self.thin)
    }

    pub fn with_seed(&self, seed: u64, chain_id: u64) -> Self {
        Self {
            seed,
            chain_id,
            ..self.clone()
        }
    }
}
