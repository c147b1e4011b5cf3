use std::path::PathBuf;
use std::process::ExitCode;

use apm_cli::{parse_config, run_command, Command, RunOptions, EXIT_INTERNAL};
use clap::Parser;
use log::error;

/// Expected-utility optimization and risk-neutral measures in a
/// finite-truncation arbitrage pricing model.
#[derive(Debug, Parser)]
#[command(name = "apm", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override; takes precedence over `SEED` and the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Use Monte Carlo scenarios with this many draws.
    #[arg(long)]
    scenarios: Option<usize>,
    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

fn env_seed() -> Result<Option<u64>, String> {
    match std::env::var("SEED") {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| format!("SEED={v:?} is not an unsigned integer")),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(format!("SEED: {e}")),
    }
}

fn run(cli: Cli) -> Result<i32, String> {
    let cfg = parse_config(&cli.config).map_err(|e| e.to_string())?;
    let opts = RunOptions { out: cli.out, seed: cli.seed, env_seed: env_seed()?, scenarios: cli.scenarios };
    if opts.scenarios == Some(0) {
        return Err("--scenarios must be at least 1".into());
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        pool = pool.num_threads(n.max(1));
    }
    let pool = pool.build().map_err(|e| e.to_string())?;
    let outcome = pool.install(|| run_command(cli.command, &cfg, &opts)).map_err(|e| e.to_string())?;
    if !outcome.failures.is_empty() {
        eprintln!("assumption checks failed: {}", outcome.failures.join(", "));
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).target(env_logger::Target::Stderr).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            error!("{msg}");
            ExitCode::from(EXIT_INTERNAL as u8)
        }
    }
}
