//! Command-line front end of `mechfringe`.
//!
//! Every run is described by a TOML config file (see [`config`]) and writes
//! plot-ready files into an output directory. Each file starts with the tool
//! version, the SHA-256 of the canonical config and the seed, as `#` comment
//! lines in CSV, a `provenance` object in JSON, or a `.meta.json` sidecar
//! next to binary dumps.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::Run;
use crate::error::{CliError, CliResult};
use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "mechfringe", version, about = "Photon-counting-conditioned mechanical states: filters, heralding, Wigner functions, sampling and trace fits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Verb,

    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for stochastic commands; overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,

    /// Worker threads; 1 gives the reference bit-exact path. Defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Print the summary scalars as JSON on standard output.
    #[arg(long, global = true)]
    pub summary: bool,

    /// Replace existing output files.
    #[arg(long, global = true)]
    pub overwrite: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Verb {
    /// Filter curves and conditional position distributions.
    Filter,
    /// Closed-form against quadrature heralding probabilities over a grid.
    Herald,
    /// Wigner function of a conditional state with its negativity.
    Wigner,
    /// Monte-Carlo ensembles of click-conditioned drive states.
    Sample,
    /// Synthetic readout traces fitted back to phase-space points.
    Synthfit,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Filter => "filter",
            Verb::Herald => "herald",
            Verb::Wigner => "wigner",
            Verb::Sample => "sample",
            Verb::Synthfit => "synthfit",
        }
    }
}

/// Runs the command without writing anything.
pub fn execute(cli: &Cli) -> CliResult<Run> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config(format!("{} needs --config PATH", cli.command.name())))?;
    match cli.command {
        Verb::Filter => commands::cmd_filter(&config::load(path)?, cli.format),
        Verb::Herald => commands::cmd_herald(&config::load(path)?, cli.format),
        Verb::Wigner => commands::cmd_wigner(&config::load(path)?, cli.format),
        Verb::Sample => commands::cmd_sample(&config::load(path)?, cli.format, cli.seed),
        Verb::Synthfit => commands::cmd_synthfit(&config::load(path)?, cli.format, cli.seed),
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot set up {n} threads: {e}")))?;
    }
    let result = execute(cli)?;
    result.outputs.write(&cli.out, cli.overwrite)?;
    if cli.summary {
        println!("{}", serde_json::to_string_pretty(&result.summary).expect("summary serializes"));
    }
    Ok(())
}
