//! `umcl`: synthetic data, training, evaluation and gradient checks.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "umcl", version, about = "Compression-robust multimodal deepfake detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic train/test splits as feature files plus a manifest.
    Synth {
        /// Samples per class in the training split.
        #[arg(long)]
        n: usize,
        /// Samples per class in the test split; defaults to `--n`.
        #[arg(long)]
        n_test: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Generator overrides as `key=value` lines.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Train a model; writes model.ckpt, history and config.
    Train {
        /// Run file with training keys plus `data` and `suite`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dataset directory from `synth`; overrides `data` in the config.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Ablation preset A, B, C or D.
        #[arg(long)]
        ablation: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Evaluate a checkpoint on the test split.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// clean, ladder, ratio or robustness.
        #[arg(long, default_value = "clean")]
        suite: String,
        /// Report directory; defaults to the checkpoint's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference check of every loss term and the total.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        coords: usize,
        /// Corrupt the analytic gradient to exercise the failure path.
        #[arg(long, hide = true)]
        broken_fixture: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = commands::init_threads().and_then(|()| match cli.command {
        Command::Synth {
            n,
            n_test,
            seed,
            out,
            spec,
        } => commands::synth(n, n_test.unwrap_or(n), seed, &out, spec.as_deref()),
        Command::Train {
            config,
            data,
            out,
            ablation,
            seed,
            epochs,
        } => commands::train(&commands::TrainArgs {
            config,
            data,
            out,
            ablation,
            seed,
            epochs,
        }),
        Command::Eval { ckpt, data, suite, out } => commands::eval(&ckpt, &data, &suite, out.as_deref()),
        Command::Gradcheck {
            seed,
            coords,
            broken_fixture,
        } => commands::gradcheck(seed, coords, broken_fixture),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
