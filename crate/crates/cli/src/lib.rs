//! Command-line front end for `qus-core`.
//!
//! Every command reads its own `[section]` of a flat configuration file,
//! writes CSV outputs under `--out`, and stamps each file with the command
//! name and a SHA-256 of the configuration so outputs can be traced back to
//! the settings that produced them.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod inputs;
pub mod settings;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::ConfigFile;
pub use crate::error::{CliError, Result};
use crate::format::Provenance;

#[derive(Debug, Parser)]
#[command(name = "qus", version, about = "Regularized attenuation and backscatter estimation")]
pub struct Cli {
    /// Configuration file; commands read their own [section].
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides the seed of the synth command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Exit with status 3 if any column fails or does not converge.
    #[arg(long, global = true)]
    pub strict: bool,

    /// Output directory.
    #[arg(long, global = true, default_value = "qus-out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate synthetic log-ratio data with ground truth.
    Synth,
    /// Estimate parameter maps.
    Estimate,
    /// Compute and export data-term weights.
    Weights,
    /// Bias and variance of estimated maps inside regions of interest.
    Evaluate,
    /// Sweep the regularization weight and check stability by doubling.
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Estimate => "estimate",
            Command::Weights => "weights",
            Command::Evaluate => "evaluate",
            Command::Sweep => "sweep",
        }
    }
}

/// Everything a command needs besides its own section.
pub struct Context {
    pub config: ConfigFile,
    pub command: Command,
    pub seed: Option<u64>,
    pub strict: bool,
    pub out: PathBuf,
}

impl Context {
    pub fn provenance(&self) -> Provenance<'_> {
        Provenance {
            command: self.command.name(),
            config_hash: self.config.hash(),
        }
    }

    pub fn out_path(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.out.join(rel)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::empty(),
    };
    if let Some(seed) = cli.seed {
        config = config.with_override(&format!("seed={seed}"));
    }
    let ctx = Context {
        config,
        command: cli.command,
        seed: cli.seed,
        strict: cli.strict,
        out: cli.out,
    };
    match ctx.command {
        Command::Synth => commands::synth::run(&ctx),
        Command::Estimate => commands::estimate::run(&ctx),
        Command::Weights => commands::weights::run(&ctx),
        Command::Evaluate => commands::evaluate::run(&ctx),
        Command::Sweep => commands::sweep::run(&ctx),
    }
}
