use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mpgibbs_cli::commands::{cmd_eval, cmd_generate, cmd_run};

#[derive(Parser)]
#[command(
    name = "mpgibbs",
    about = "Multipath Gibbs sampling experiments: dataset generation, sampler runs, metric tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory from a spec file.
    Generate {
        /// Generation spec (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a sampler experiment: all repetitions, traces and the summary.
    Run {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output run directory.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for concurrent repetitions.
        #[arg(long)]
        threads: Option<usize>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute metrics over a finished run directory.
    Eval {
        /// Run directory produced by `run`.
        #[arg(long)]
        run: PathBuf,
        /// Eval spec (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for metric files.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { config, out, seed } => {
            cmd_generate(&config, &out, seed).map(|digest| {
                println!("dataset digest: {digest}");
            })
        }
        Command::Run {
            config,
            out,
            threads,
            seed,
        } => cmd_run(&config, &out, threads, seed),
        Command::Eval { run, config, out } => cmd_eval(&run, &config, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
