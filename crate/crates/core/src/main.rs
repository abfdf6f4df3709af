use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chainlearn::cli_harness::{self, ExperimentConfig, Mode, Overrides, RunOptions};
use chainlearn::error::{Error, Result};

#[derive(Parser)]
#[command(name = "chainlearn", version, about = "Learning equilibria in two-stage supply chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Stackelberg equilibrium of the configured distribution.
    SolveSe(RunArgs),
    /// Run repeated-game learners over horizons and seeds.
    Simulate(RunArgs),
    /// Run Exp3-VI on an adversarial instance.
    Adversarial(RunArgs),
    /// Recompute aggregate.json for an existing run directory.
    Aggregate { dir: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// First seed of a consecutive range.
    #[arg(long)]
    seed_base: Option<u64>,
    /// Number of seeds.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, env = "CHAINLEARN_OUT_DIR")]
    out: Option<PathBuf>,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    force: bool,
}

fn load(args: &RunArgs, expected: Mode) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig::load(&args.config)?;
    if cfg.mode != expected {
        return Err(Error::config(format!(
            "{} has mode {:?}, which does not match the subcommand",
            args.config.display(),
            cfg.mode
        )));
    }
    cfg.resolve(&Overrides { seed_base: args.seed_base, seeds: args.seeds, out: args.out.clone() })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SolveSe(args) => {
            let cfg = load(&args, Mode::SolveSe)?;
            let report = cli_harness::solve_se(&cfg)?;
            let json = serde_json::to_string_pretty(&report)?;
            if let Some(dir) = &cfg.output_dir {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                let path = dir.join("equilibrium.json");
                std::fs::write(&path, format!("{json}\n")).map_err(|e| Error::io(&path, e))?;
            }
            println!("{json}");
        }
        Command::Simulate(args) => experiment(&args, Mode::Simulate, cli.quiet)?,
        Command::Adversarial(args) => experiment(&args, Mode::Adversarial, cli.quiet)?,
        Command::Aggregate { dir } => {
            let agg = cli_harness::aggregate_and_write(&dir, cli.quiet)?;
            println!("{}", serde_json::to_string_pretty(&agg)?);
        }
    }
    Ok(())
}

fn experiment(args: &RunArgs, mode: Mode, quiet: bool) -> Result<()> {
    let cfg = load(args, mode)?;
    let dir = cli_harness::run_experiment(&cfg, &RunOptions { force: args.force, quiet })?;
    if !quiet {
        eprintln!("wrote {}", dir.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
