//! `distib`: train, evaluate, attack, and export artifacts for the
//! transmitted-information-bottleneck toolkit.

use clap::{Parser, Subcommand};
use distib_cli::ops;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "distib", version, about = "Disentangled representation learning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write metrics plus a checkpoint.
    Train {
        /// Flat key=value config file.
        #[arg(long)]
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report clean accuracy of a checkpoint on the configured datasets.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// Checkpoint written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gradient-sign attack accuracies over a list of strengths.
    Attack {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Comma-separated perturbation strengths.
        #[arg(long, default_value = "0.1,0.2,0.3")]
        eps: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross label and style codes over test samples; write a PGM tile grid.
    Swap {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Grid side: the first N test rows are crossed pairwise.
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one run per beta and write the information-plane table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated compression weights in [0,1].
        #[arg(long)]
        betas: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the transmitted-information identity on random joints.
    VerifyTheorem1 {
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional directory for a per-trial report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the synthetic shapes dataset to IDX files.
    SynthData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train { config, seed, out } => ops::train(&config, seed, out),
        Command::Eval {
            config,
            checkpoint,
            out,
        } => ops::eval(&config, &checkpoint, out),
        Command::Attack {
            config,
            checkpoint,
            eps,
            out,
        } => ops::attack(&config, &checkpoint, &eps, out),
        Command::Swap {
            config,
            checkpoint,
            n,
            out,
        } => ops::swap(&config, &checkpoint, n, out),
        Command::Sweep {
            config,
            betas,
            seed,
            out,
        } => ops::sweep(&config, &betas, seed, out),
        Command::VerifyTheorem1 { trials, seed, out } => ops::verify_theorem1(trials, seed, out),
        Command::SynthData { config, seed, out } => ops::synth_data(&config, seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            eprintln!("run `distib --help` for usage");
            ExitCode::FAILURE
        }
    }
}
