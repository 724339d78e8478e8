use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::error::CliError;
use crate::experiments::{self, Summary};
use crate::output::OutDir;

#[derive(Debug, Parser)]
#[command(name = "smi", version, about = "Semi-modular inference experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// TOML config; any subset of the defaults may be given.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Comma-separated δ values; `inf` is allowed.
    #[arg(long, global = true, value_delimiter = ',', value_name = "a,b,...")]
    pub delta_grid: Option<Vec<f64>>,
    /// Comma-separated η values in [0, 1] (hpv only).
    #[arg(long, global = true, value_delimiter = ',', value_name = "a,b,...")]
    pub eta_grid: Option<Vec<f64>>,
    /// Replicates (biased-data, regression) or random models (coherence).
    #[arg(long, global = true, value_name = "N")]
    pub replicates: Option<usize>,
    /// Print the full default config as TOML and exit.
    #[arg(long, global = true)]
    pub print_defaults: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Exact ELPD and PMSE curves for the biased-data example.
    BiasedData,
    /// LOOCV selection of δ in the misspecified regression example.
    Regression,
    /// Nested MCMC over δ and η grids on the HPV data.
    Hpv {
        /// HPV CSV (`pop_id,ncases,person_years,ninf,npart`).
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
    },
    /// Additivity and coherence checks on random discrete models.
    Coherence {
        /// Add a mismatched loss/update pair; the run should then fail.
        #[arg(long)]
        inject_mismatch: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::BiasedData => "biased-data",
            Self::Regression => "regression",
            Self::Hpv { .. } => "hpv",
            Self::Coherence { .. } => "coherence",
        }
    }
}

fn reject(flag: &str, cmd: &Command) -> CliError {
    CliError::Usage(format!("--{flag} does not apply to {}", cmd.name()))
}

/// Fold flags into the config.
pub fn resolve(cli: &Cli, cmd: &Command) -> Result<(Config, PathBuf), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match cmd {
        Command::BiasedData => {
            if let Some(g) = &cli.delta_grid {
                cfg.biased_data.delta_grid = g.clone();
            }
            if let Some(n) = cli.replicates {
                cfg.biased_data.replicates = n;
            }
            if cli.eta_grid.is_some() {
                return Err(reject("eta-grid", cmd));
            }
        }
        Command::Regression => {
            if let Some(g) = &cli.delta_grid {
                cfg.regression.delta_grid = g.clone();
            }
            if let Some(n) = cli.replicates {
                cfg.regression.replicates = n;
            }
            if cli.eta_grid.is_some() {
                return Err(reject("eta-grid", cmd));
            }
        }
        Command::Hpv { data } => {
            if let Some(g) = &cli.delta_grid {
                cfg.hpv.delta_grid = g.clone();
            }
            if let Some(g) = &cli.eta_grid {
                cfg.hpv.eta_grid = g.clone();
            }
            if data.is_some() {
                cfg.hpv.data = data.clone();
            }
            if cli.replicates.is_some() {
                return Err(reject("replicates", cmd));
            }
        }
        Command::Coherence { inject_mismatch } => {
            if let Some(n) = cli.replicates {
                cfg.coherence.models = n;
            }
            if *inject_mismatch {
                cfg.coherence.inject_mismatch = true;
            }
            if cli.delta_grid.is_some() {
                return Err(reject("delta-grid", cmd));
            }
            if cli.eta_grid.is_some() {
                return Err(reject("eta-grid", cmd));
            }
        }
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(cmd.name()));
    Ok((cfg, out))
}

pub fn execute(cmd: &Command, cfg: &Config, out: &OutDir) -> Result<Summary, CliError> {
    match cmd {
        Command::BiasedData => experiments::biased::run(&cfg.biased_data, cfg.seed, out),
        Command::Regression => experiments::regression::run(&cfg.regression, cfg.seed, out),
        Command::Hpv { .. } => experiments::hpv::run(&cfg.hpv, cfg.seed, out),
        Command::Coherence { .. } => experiments::coherence::run(&cfg.coherence, cfg.seed, out),
    }
}

fn run_inner<W: Write>(cli: Cli, stdout: &mut W) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    };
    if cli.print_defaults {
        write!(stdout, "{}", Config::defaults_toml()).map_err(io)?;
        return Ok(());
    }
    let Some(cmd) = cli.command.clone() else {
        return Err(CliError::Usage("a subcommand is required (biased-data, regression, hpv, coherence)".into()));
    };
    let (cfg, out_path) = resolve(&cli, &cmd)?;
    let out = OutDir::create(&out_path)?;
    let summary = execute(&cmd, &cfg, &out)?;
    for line in &summary.lines {
        writeln!(stdout, "{line}").map_err(io)?;
    }
    writeln!(stdout, "outputs in {}", out_path.display()).map_err(io)?;
    match summary.failed {
        Some(reason) => Err(CliError::CheckFailed(reason)),
        None => Ok(()),
    }
}

/// Parse `args`, run, and return the process exit code.
pub fn run<I, T, W>(args: I, stdout: &mut W) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_inner(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
