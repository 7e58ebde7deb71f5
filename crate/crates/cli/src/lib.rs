//! `bladenv`: file-based pipeline from a design database to gated profiles.
//!
//! Each verb reads the artifacts of the stages before it from the output
//! directory and refuses to run when they are missing or were produced under
//! a different configuration.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::pipeline::Pipeline;

#[derive(Debug, Parser)]
#[command(name = "bladenv", version, about = "Blade envelopes from inactive subspaces")]
struct Cli {
    /// JSON configuration; defaults apply to absent fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, global = true, default_value = "bladenv-out")]
    out: PathBuf,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Design of experiments and the baseline profile.
    Doe,
    /// Qoi of every design.
    Evaluate,
    /// Sparse polynomial surrogate.
    Fit,
    /// Gradient covariance and its active/inactive split.
    Subspace,
    /// Inactive-subspace designs and their profiles.
    Sample,
    /// Control zone and tolerance covariance.
    Envelope,
    /// Verdicts for member, random, cross-parameterized and external profiles.
    Gate {
        /// Extra profiles: wide `profile_id,y1..` CSV or one `side,x,y` profile.
        #[arg(long)]
        profiles: Option<PathBuf>,
    },
    /// Figures and tables under `report/`.
    Report,
    /// Every stage in order.
    RunAll,
}

fn execute(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let p = Pipeline::new(cfg, &cli.out)?;
    match cli.command {
        Command::Doe => p.doe(),
        Command::Evaluate => p.evaluate(),
        Command::Fit => p.fit().map(|_| ()),
        Command::Subspace => p.subspace().map(|_| ()),
        Command::Sample => p.sample(),
        Command::Envelope => p.envelope().map(|_| ()),
        Command::Gate { profiles } => p.gate(profiles.as_deref()).map(|_| ()),
        Command::Report => report::write_report(&p),
        Command::RunAll => p.run_all(),
    }
}

/// Parses `args` (program name first), runs the verb and returns the exit
/// code: 0 success, 2 configuration, 3 upstream artifacts, 4 numerical.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        pool = pool.num_threads(n);
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| execute(cli)),
        Err(e) => Err(CliError::config(format!("cannot start {:?} worker threads: {e}", cli.jobs))),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            e.exit_code()
        }
    }
}
