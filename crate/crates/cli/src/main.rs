//! `qldpc`: batch driver for code construction, decoding, memory and
//! percolation experiments, and gadget verification.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use thiserror::Error;

use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("reading {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("output: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Expander(#[from] qldpc::expander::ExpanderError),
    #[error(transparent)]
    Complex(#[from] qldpc::complex::ComplexError),
    #[error(transparent)]
    Gadget(#[from] qldpc::gadgets::GadgetError),
    #[error(transparent)]
    Experiment(#[from] qldpc::experiments::ExperimentError),
    #[error(transparent)]
    BadSet(#[from] qldpc::badsets::BadSetError),
}

#[derive(Parser)]
#[command(name = "qldpc", version = qldpc::VERSION, about = "Product quantum LDPC code experiments")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shots or trials per data point, overriding the config.
    #[arg(long, global = true)]
    shots: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads (all cores when omitted).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Build the configured code and write its parameter report.
    BuildCode,
    /// Check lossless expansion of every factor graph.
    CheckExpander,
    /// Small-set flip decoding on random and exhaustive errors.
    DecodeTrials,
    /// Logical failure rate of the Z-memory circuit over a noise grid.
    MemoryExperiment,
    /// Noiseless channel and depth checks of the gadget suite.
    GadgetVerify,
    /// Monte Carlo bad-set avoidance against the percolation bound.
    Percolation,
    /// Memory experiment over several codes for threshold comparison.
    ThresholdSweep,
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let path = cli.config.as_deref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(s) = cli.shots {
        cfg.shots = s;
    }
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    std::fs::create_dir_all(&cli.out)?;
    // resolved config, so a run can be repeated from its outputs alone
    std::fs::write(cli.out.join("config.toml"), cfg.to_toml())?;
    let out: &Path = &cli.out;
    match cli.cmd {
        Cmd::BuildCode => commands::build_code(&cfg, out),
        Cmd::CheckExpander => commands::check_expander(&cfg, out),
        Cmd::DecodeTrials => commands::decode_trials(&cfg, out),
        Cmd::MemoryExperiment => commands::memory_experiment(&cfg, out),
        Cmd::GadgetVerify => commands::gadget_verify(&cfg, out),
        Cmd::Percolation => commands::percolation(&cfg, out),
        Cmd::ThresholdSweep => commands::threshold_sweep(&cfg, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            error!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(2)
        }
    }
}
