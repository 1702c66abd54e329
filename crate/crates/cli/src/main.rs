use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use spatial_mlp::config::ExperimentConfig;
use spatial_mlp::pipeline::{self, Command};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    Simulate,
    Fit,
    Predict,
    ApproxError,
    Diagnostics,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Simulate => Command::Simulate,
            Sub::Fit => Command::Fit,
            Sub::Predict => Command::Predict,
            Sub::ApproxError => Command::ApproxError,
            Sub::Diagnostics => Command::Diagnostics,
        }
    }
}

/// Bayesian spatial regression with exact, LP, CT and MLP covariances.
#[derive(Debug, Parser)]
#[command(name = "spatial-mlp", version)]
struct Args {
    subcommand: Sub,
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for matrix builds and prediction.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: Args) -> anyhow::Result<Vec<PathBuf>> {
    if let Some(n) = args.threads {
        pipeline::set_threads(n);
    }
    let mut cfg = ExperimentConfig::load(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let cmd: Command = args.subcommand.into();
    log::info!("{} with seed {}", cmd.name(), cfg.seed);
    pipeline::run(cmd, &cfg, &args.out).with_context(|| format!("{} failed", cmd.name()))
}
