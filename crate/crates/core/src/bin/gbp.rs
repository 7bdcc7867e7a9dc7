use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gbp::experiments::{run_file, ExperimentKind, CONFIG_REFERENCE};

/// Train manifold-constrained networks from a TOML config.
///
/// Exit codes: 0 success, 1 configuration error, 2 divergence, 3 I/O error.
#[derive(Parser)]
#[command(name = "gbp", version, after_long_help = CONFIG_REFERENCE)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover the top-p principal subspace with gBP and PGD.
    PcaRecovery(RunArgs),
    /// Train a (denoising) autoencoder: dae, odae or o2dae.
    Autoencoder(RunArgs),
    /// Factorize a trained FC layer and fine-tune.
    Lowrank(RunArgs),
    /// Train a network built from model.layers and save a snapshot.
    Train(RunArgs),
}

#[derive(Args)]
#[command(after_long_help = CONFIG_REFERENCE)]
struct RunArgs {
    /// Experiment config (TOML); a run's manifest.toml also works.
    #[arg(long)]
    config: PathBuf,
    /// Overrides optimizer.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::PcaRecovery(a) => (ExperimentKind::PcaRecovery, a),
        Command::Autoencoder(a) => (ExperimentKind::Autoencoder, a),
        Command::Lowrank(a) => (ExperimentKind::LowrankSimplify, a),
        Command::Train(a) => (ExperimentKind::TrainGeneric, a),
    };
    match run_file(&args.config, Some(kind), args.seed, args.out.as_deref()) {
        Ok((report, dir)) => {
            let mut out = std::io::stdout().lock();
            // a closed pipe is not a failure of the run
            let _ = writeln!(
                out,
                "{}# outputs in {}",
                report.summary().render(),
                dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
