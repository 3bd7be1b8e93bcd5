use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use asymshap_cli::commands;
use asymshap_cli::{CliResult, Config};

#[derive(Parser)]
#[command(
    name = "asymshap",
    version,
    about = "Asymmetric data Shapley valuation: exact oracles, Monte Carlo estimation, \
             KNN-surrogate recursion, and experiment presets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute per-point values and write a JSON report
    Value(CommonArgs),
    /// Cross-check the exact computation paths on generated small instances
    Verify(CommonArgs),
    /// Run an experiment preset and write curves / allocation artifacts
    Experiment(CommonArgs),
    /// Generate synthetic train/test/partition CSV files
    Gen(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file
    #[arg(long)]
    config: Option<PathBuf>,

    /// Valuation method: oracle | mc | knn | loo
    #[arg(long)]
    method: Option<String>,

    /// Base random seed
    #[arg(long)]
    seed: Option<u64>,

    /// Monte Carlo worker streams (also capped by ASYMSHAP_THREADS)
    #[arg(long)]
    workers: Option<usize>,

    /// Output file (value) or directory (experiment, gen)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Override a config key, e.g. --set knn.k=5 (repeatable, later wins)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl CommonArgs {
    fn into_config(self) -> CliResult<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::from_file(path)?,
            None => Config::new(),
        };
        for spec in &self.sets {
            cfg.apply_override(spec)?;
        }
        if let Some(method) = &self.method {
            cfg.set("method", method);
        }
        if let Some(seed) = self.seed {
            cfg.set("seed", &seed.to_string());
        }
        if let Some(workers) = self.workers {
            cfg.set("mc.workers", &workers.to_string());
        }
        if let Some(out) = &self.out {
            cfg.set("out", &out.to_string_lossy());
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Value(args) => commands::run_value(&args.into_config()?),
        Command::Verify(args) => commands::run_verify(&args.into_config()?),
        Command::Experiment(args) => commands::run_experiment(&args.into_config()?),
        Command::Gen(args) => commands::run_gen(&args.into_config()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
