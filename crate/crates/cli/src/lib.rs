//! Command-line pipeline: validate inputs, fit goal-probability models,
//! tabulate coalitions and rank players by PRS.
//!
//! Exit codes: 0 success, 2 input error, 3 validation error, 4 pipeline error.

mod artifacts;
mod commands;
pub mod config;
mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use artifacts::{Manifest, MANIFEST_FILE};
pub use commands::run_prs;
pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "prs", version, about = "xGA models and restricted-Shapley player rankings")]
pub struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true, env = config::CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Overrides the bootstrap base seed (and the generator seed for `synth`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides `paths.output`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Restrict team-level commands to this team; repeatable.
    #[arg(long = "team", global = true)]
    pub teams: Vec<String>,
    /// Only print errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Load and filter the data; report per-team action and coalition counts.
    Validate,
    /// Write a synthetic dataset (actions.csv, players.csv, ground_truth.json).
    Synth,
    /// Fit the configured model and its XG counterpart.
    Train,
    /// Out-of-bag metrics for XG and XGA, VIF and feature-importance intervals.
    Evaluate,
    /// Possible versus observed coalitions per team.
    Coalitions,
    /// Full pipeline through PRS tables, efficiency, scatter data and the run manifest.
    Prs,
    /// Rebuild the scatter table from existing PRS and efficiency outputs.
    Scatter,
}

/// Resolved settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Run {
    pub cfg: RunConfig,
    pub teams: Vec<String>,
    pub quiet: bool,
}

impl Run {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let mut cfg = match &cli.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = cli.seed {
            cfg.bootstrap.base_seed = seed;
            if cli.command == Command::Synth {
                cfg.synth.seed = seed;
            }
        }
        if let Some(out) = &cli.out {
            cfg.paths.output = out.clone();
        }
        Ok(Self { cfg, teams: cli.teams.clone(), quiet: cli.quiet })
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let run = Run::from_cli(cli)?;
    match cli.command {
        Command::Validate => commands::validate(&run),
        Command::Synth => commands::synth(&run),
        Command::Train => commands::train(&run),
        Command::Evaluate => commands::evaluate(&run),
        Command::Coalitions => commands::coalitions(&run),
        Command::Prs => commands::run_prs(&run).map(|_| ()),
        Command::Scatter => commands::scatter(&run),
    }
}
