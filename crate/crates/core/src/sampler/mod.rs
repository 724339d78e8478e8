//! Random-walk Metropolis engines for candidate posteriors.
//!
//! The nested sampler runs an outer chain on `(φ, θ̃)` targeting the
//! imputation-stage density of the chosen setting and, for every outer
//! iteration, a short inner chain on `θ` targeting `π(θ | Y, φ)`, keeping the
//! last inner state. Adaptation happens during burn-in only.

mod chains;
mod config;
mod draws;
mod proposal;

pub use chains::{run_augmented_mcmc, run_full_bayes, run_nested_mcmc, sample_theta_given_phi};
pub use config::McmcConfig;
pub use draws::PosteriorDraws;
pub use proposal::RandomWalkBlock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for `(seed, stream)`; distinct streams never overlap.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
