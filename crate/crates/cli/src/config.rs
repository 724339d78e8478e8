//! Experiment configuration. Every default is embedded here and printable
//! with `--print-defaults`; a TOML file may override any subset.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use smi_core::closed_form::PredictiveForm;
use smi_core::coherence::SuiteConfig;
use smi_core::models::HpvModel;
use smi_core::sampler::McmcConfig;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Base seed; every replicate or chain derives its own stream from it.
    pub seed: u64,
    /// Output directory. Defaults to `results/<experiment>`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub biased_data: BiasedDataSettings,
    pub regression: RegressionSettings,
    pub hpv: HpvSettings,
    pub coherence: CoherenceSettings,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            out: None,
            biased_data: BiasedDataSettings::default(),
            regression: RegressionSettings::default(),
            hpv: HpvSettings::default(),
            coherence: CoherenceSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasedDataSettings {
    pub n: usize,
    pub m: usize,
    pub sigma_y: f64,
    pub sigma_z: f64,
    pub sigma_theta: f64,
    pub phi_true: f64,
    pub theta_true: f64,
    pub replicates: usize,
    /// Gaussian-kernel bandwidths; `0` is Bayes and `inf` is Cut.
    pub delta_grid: Vec<f64>,
    pub predictive_form: PredictiveForm,
    /// Posterior draws written per candidate for scatter plots.
    pub samples: usize,
}

impl Default for BiasedDataSettings {
    fn default() -> Self {
        Self {
            n: 50,
            m: 25,
            sigma_y: 1.0,
            sigma_z: 2.0,
            sigma_theta: 0.33,
            phi_true: 0.0,
            theta_true: 1.0,
            replicates: 50,
            delta_grid: log_delta_grid(),
            predictive_form: PredictiveForm::Exact,
            samples: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionSettings {
    pub n: usize,
    pub m: usize,
    pub sigma_y: f64,
    pub sigma_z: f64,
    pub phi_true: f64,
    pub theta_true: f64,
    /// Covariates are drawn from `U(x_lo, x_hi)`.
    pub x_lo: f64,
    pub x_hi: f64,
    /// Exponents of the true covariate effect `θ* X^k`.
    pub k_grid: Vec<f64>,
    pub replicates: usize,
    pub delta_grid: Vec<f64>,
}

impl Default for RegressionSettings {
    fn default() -> Self {
        Self {
            n: 50,
            m: 50,
            sigma_y: 0.25,
            sigma_z: 3.0,
            phi_true: 0.0,
            theta_true: 1.0,
            x_lo: 0.0,
            x_hi: 2.0,
            k_grid: vec![1.0, 1.25, 1.5, 1.75, 2.0],
            replicates: 100,
            delta_grid: log_delta_grid(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountKernel {
    #[default]
    DiscreteUniform,
    ScaledTopHat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HpvSettings {
    /// CSV with header `pop_id,ncases,person_years,ninf,npart`; the bundled
    /// 13-population table when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    pub kernel: CountKernel,
    pub delta_grid: Vec<f64>,
    pub eta_grid: Vec<f64>,
    pub theta_prior_sd: f64,
    pub outer_steps: usize,
    pub inner_steps: usize,
    pub burn_in_fraction: f64,
    pub thin: usize,
    /// η whose matched δ is reported.
    pub match_eta: f64,
    /// Interpolated candidates per δ-grid segment in the η ↔ δ matching.
    pub match_refine: usize,
    /// (θ₁, θ₂) draws kept per posterior in the cloud file.
    pub cloud_draws: usize,
}

impl Default for HpvSettings {
    fn default() -> Self {
        Self {
            data: None,
            kernel: CountKernel::DiscreteUniform,
            delta_grid: vec![0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 12.0, 16.0, 20.0, 24.0, 32.0, 48.0, 64.0],
            eta_grid: vec![0.0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0],
            theta_prior_sd: HpvModel::<f64>::DEFAULT_THETA_PRIOR_SD,
            outer_steps: 40_000,
            inner_steps: 20,
            burn_in_fraction: 0.25,
            thin: 4,
            match_eta: 0.1,
            match_refine: 20,
            cloud_draws: 2000,
        }
    }
}

impl HpvSettings {
    pub fn mcmc(&self, seed: u64, chain_id: u64) -> McmcConfig {
        McmcConfig {
            outer_steps: self.outer_steps,
            inner_steps: self.inner_steps,
            burn_in_fraction: self.burn_in_fraction,
            thin: self.thin,
            seed,
            chain_id,
            ..McmcConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoherenceSettings {
    pub models: usize,
    pub max_grid: usize,
    pub max_obs: usize,
    pub max_blocks: usize,
    pub tolerance: f64,
    pub witness_threshold: f64,
    pub delta: f64,
    /// Add a deliberately mismatched loss/update pair to the sanctioned set.
    pub inject_mismatch: bool,
}

impl Default for CoherenceSettings {
    fn default() -> Self {
        let s = SuiteConfig::default();
        Self {
            models: s.models,
            max_grid: s.max_grid,
            max_obs: s.max_obs,
            max_blocks: s.max_blocks,
            tolerance: s.tolerance,
            witness_threshold: s.witness_threshold,
            delta: s.delta,
            inject_mismatch: s.inject_mismatch,
        }
    }
}

impl CoherenceSettings {
    pub fn suite(&self, seed: u64) -> SuiteConfig {
        SuiteConfig {
            models: self.models,
            max_grid: self.max_grid,
            max_obs: self.max_obs,
            max_blocks: self.max_blocks,
            tolerance: self.tolerance,
            witness_threshold: self.witness_threshold,
            delta: self.delta,
            seed,
            inject_mismatch: self.inject_mismatch,
        }
    }
}

/// `0`, `10^{-2}, 10^{-1.95}, …, 10^2`, `inf`.
pub fn log_delta_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend((0..=80).map(|i| 10f64.powf(-2.0 + 0.05 * i as f64)));
    g.push(f64::INFINITY);
    g
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn defaults_toml() -> String {
        toml::to_string_pretty(&Self::default()).expect("defaults serialize")
    }
}

pub(crate) fn check_delta_grid(grid: &[f64]) -> Result<(), CliError> {
    if grid.is_empty() {
        return Err(CliError::Usage("delta grid is empty".into()));
    }
    if grid.iter().any(|d| d.is_nan() || *d < 0.0) {
        return Err(CliError::Usage("delta grid values must be >= 0".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage("delta grid must be strictly increasing".into()));
    }
    Ok(())
}

pub(crate) fn check_eta_grid(grid: &[f64]) -> Result<(), CliError> {
    if grid.is_empty() {
        return Err(CliError::Usage("eta grid is empty".into()));
    }
    if grid.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(CliError::Usage("eta grid values must lie in [0, 1]".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage("eta grid must be strictly increasing".into()));
    }
    Ok(())
}

pub(crate) fn check_replicates(n: usize, what: &str) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage(format!("{what} must be >= 1")));
    }
    Ok(())
}
