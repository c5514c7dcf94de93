use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod bench;
mod eval_cmd;
mod failure;
mod generate;
mod rollout;
mod settings;
mod train_cmd;

use failure::{CliResult, Failure};
use settings::Settings;

/// Lattice Boltzmann data generation and a latent-space neural surrogate.
#[derive(Debug, Parser)]
#[command(name = "latnet", version)]
struct Cli {
    /// Worker threads for the lattice solver.
    #[arg(long, global = true, env = "LATNET_THREADS")]
    threads: Option<usize>,

    /// key=value file supplying defaults for any flag not given; keys are
    /// long flag names without dashes.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate random obstacle scenes and save them as a dataset.
    Generate(generate::Args),
    /// Train the surrogate on a dataset.
    Train(train_cmd::Args),
    /// Roll a trained surrogate forward and write its frames.
    Rollout(rollout::Args),
    /// Compare surrogate rollouts with solver trajectories.
    Eval(eval_cmd::Args),
    /// Time the solver and the surrogate in lattice updates per second.
    Bench(bench::Args),
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::user("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::user(format!("cannot start {n} threads: {e}")))?;
    }
    let settings = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Generate(a) => generate::run(a, &settings),
        Command::Train(a) => train_cmd::run(a, &settings),
        Command::Rollout(a) => rollout::run(a, &settings),
        Command::Eval(a) => eval_cmd::run(a, &settings),
        Command::Bench(a) => bench::run(a, &settings),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}
