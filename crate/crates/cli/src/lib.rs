//! Experiment drivers for the biased-data, regression and HPV studies and
//! the coherence report, plus the `smi` command line around them.

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod experiments;
pub mod output;

pub use cli::run;
pub use config::Config;
pub use error::CliError;
