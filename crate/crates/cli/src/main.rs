//! `phasecov` command-line driver.
//!
//! Exit status: 0 success, 1 validation failure (including failed verification
//! checks), 2 parse error, 3 numerical abort. Failures print one JSON line
//! `{"status":..,"reason":..,"detail":..}` on stderr.

mod commands;
mod config;
mod failure;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Context;
use config::ExperimentConfig;
use failure::Failure;

#[derive(Debug, Parser)]
#[command(
    name = "phasecov",
    version,
    about = "Covariant phase-space measurement experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Random seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for quadrature.
    #[arg(long, global = true, env = "PHASECOV_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Validate the configured states and report their block structure.
    Validate,
    /// Probability density on a grid (CSV).
    Density,
    /// Region measures and probabilities (JSON).
    Measure,
    /// Sampled measurement outcomes (CSV).
    Sample,
    /// Verification report (JSON).
    Verify,
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::parse("arguments", "--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::parse("arguments", e.to_string()))?;
    }
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::parse("arguments", "--config <path> is required"))?;
    let config = ExperimentConfig::load(path)?;
    let base = path
        .parent()
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let ctx = Context {
        out: commands::output_dir(cli.out.as_deref(), &config, &base),
        seed: cli.seed.or(config.seed).unwrap_or(0),
        config,
        base,
    };
    match cli.command {
        Command::Validate => commands::validate(&ctx),
        Command::Density => commands::density(&ctx),
        Command::Measure => commands::measure(&ctx),
        Command::Sample => commands::sample_cmd(&ctx),
        Command::Verify => commands::verify(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let first = e
                .to_string()
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ")
                .to_string();
            eprintln!("{}", Failure::parse("arguments", first).line());
            return ExitCode::from(failure::PARSE);
        }
    };
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            log::debug!("{f}");
            eprintln!("{}", f.line());
            ExitCode::from(f.status)
        }
    }
}
