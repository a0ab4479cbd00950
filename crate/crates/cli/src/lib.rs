//! Batch front end for `tlsdiff`. Every command reads one TOML config (or a
//! previous run's manifest), writes plot-ready CSVs into `--out`, and records a
//! [`manifest::RunManifest`] with SHA-256 digests of everything it wrote.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod manifest;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const DATA: i32 = 3;
    pub const CONVERGENCE: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Data(_) => exit::DATA,
            CliError::Convergence(_) => exit::CONVERGENCE,
            CliError::Io { .. } => exit::IO,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<tlsdiff::Error> for CliError {
    fn from(e: tlsdiff::Error) -> Self {
        use tlsdiff::Error as E;
        match e {
            E::Config(m) | E::InvalidArgument(m) => CliError::Config(m),
            E::Data { .. } | E::Domain(_) | E::Singular(_) => CliError::Data(e.to_string()),
            E::Io(source) => CliError::Io {
                path: PathBuf::new(),
                source,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "tlsdiff",
    version,
    about = "TLS defect spectral-diffusion toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML config, or a manifest.json from an earlier run to replay it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a time-resolved T1 dataset.
    Synth(Common),
    /// Simulate spectral-diffusion trajectories.
    Simulate(Common),
    /// Fit, track and characterise the defects in a dataset.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV; may instead be given as `dataset` in the config.
        dataset: Option<PathBuf>,
        /// Spurious lines to ignore, GHz (comma separated).
        #[arg(long, value_delimiter = ',')]
        mask: Option<Vec<f64>>,
    },
    /// Diffusivity versus fluctuator density.
    SweepDensity(Common),
    /// Closed-form anchors: computed versus quoted values.
    Constants(Common),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Synth(c)
            | Command::Simulate(c)
            | Command::SweepDensity(c)
            | Command::Constants(c) => c,
            Command::Analyze { common, .. } => common,
        }
    }
}

/// Runs one parsed command line; returns the manifest on success.
pub fn run(cli: &Cli) -> CliResult<manifest::RunManifest> {
    let common = cli.command.common();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        return pool.install(|| dispatch(cli));
    }
    dispatch(cli)
}

fn dispatch(cli: &Cli) -> CliResult<manifest::RunManifest> {
    match &cli.command {
        Command::Synth(c) => commands::synth::run(c),
        Command::Simulate(c) => commands::simulate::run(c),
        Command::Analyze {
            common,
            dataset,
            mask,
        } => commands::analyze::run(common, dataset.as_deref(), mask.as_deref()),
        Command::SweepDensity(c) => commands::sweep::run(c),
        Command::Constants(c) => commands::constants::run(c),
    }
}
