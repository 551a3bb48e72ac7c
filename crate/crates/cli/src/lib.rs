//! Experiment runner for overlapping noisy binary search.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::Output;
use config::ExperimentConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "overlap-search",
    version,
    about = "Noisy binary search experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Monte Carlo trials for the selected experiment.
    #[arg(long, global = true)]
    pub trials: Option<u64>,

    /// Also write SVG charts.
    #[arg(long, global = true)]
    pub plot: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Step error against the overlap for several grid sizes.
    ErrorVsAlpha,
    /// Exact and approximate tree depth against the overlap.
    DepthVsAlpha,
    /// Whole-search error against tree depth.
    ErrorVsBeta {
        /// Add the full-simulation column.
        #[arg(long)]
        simulate: bool,
    },
    /// Evolutionary sensor placement against the heuristic.
    OptimizePlacement,
    /// Monte Carlo success rate of the search, with a trace of one run.
    Simulate,
    /// Cross-checks of the closed forms; exit status 1 on any failure.
    Validate,
}

/// Resolved configuration after applying command-line overrides.
pub fn resolve(cli: &Cli) -> CliResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(trials) = cli.trials {
        match cli.command {
            Command::ErrorVsAlpha => cfg.error_vs_alpha.trials = trials,
            Command::ErrorVsBeta { .. } => cfg.error_vs_beta.trials = trials,
            Command::Simulate => cfg.simulate.trials = trials,
            Command::Validate => cfg.validate.trials = trials,
            Command::DepthVsAlpha | Command::OptimizePlacement => {}
        }
    }
    if let Command::ErrorVsBeta { simulate: true } = cli.command {
        cfg.error_vs_beta.simulate = true;
    }
    cfg.check()?;
    Ok(cfg)
}

/// Runs the selected experiment and returns a one-line summary.
pub fn run(cli: &Cli) -> CliResult<String> {
    let cfg = resolve(cli)?;
    commands::prepare_output(&cfg.output_dir)?;
    let out = Output {
        dir: cfg.output_dir.clone(),
        plot: cli.plot,
    };
    match cli.command {
        Command::ErrorVsAlpha => commands::error_vs_alpha(&cfg, &out),
        Command::DepthVsAlpha => commands::depth_vs_alpha(&cfg, &out),
        Command::ErrorVsBeta { .. } => commands::error_vs_beta(&cfg, &out),
        Command::OptimizePlacement => commands::optimize_placement(&cfg, &out),
        Command::Simulate => commands::simulate(&cfg, &out),
        Command::Validate => commands::validate(&cfg, &out),
    }
}
