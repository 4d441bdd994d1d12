//! `smelt` — one binary wrapping the curation, packing, training, and
//! verification layers of the toolkit.
//!
//! Conventions shared by every subcommand:
//! - stdout carries data and metrics, stderr carries diagnostics;
//! - configurations and reports are JSON;
//! - randomness enters only through explicit seed flags, never the clock;
//! - input files are read, never modified in place.
//!
//! Exit codes: 0 success, 2 configuration error, 3 malformed input data,
//! 4 duplicate-content registration, 5 corrupt snapshot or checkpoint,
//! 1 any other failure (including a failed gradient check).

mod cmd_append;
mod cmd_bench;
mod cmd_curate;
mod cmd_gradcheck;
mod cmd_pack;
mod cmd_train;
mod cmd_tune;
mod util;

use clap::{Parser, Subcommand};

/// Package version plus the on-disk format versions this build reads
/// and writes.
fn version_string() -> String {
    format!(
        "{} (shard {} v{}, snapshot {} v{})",
        env!("CARGO_PKG_VERSION"),
        String::from_utf8_lossy(smelt::dataset::SHARD_MAGIC),
        smelt::dataset::SHARD_VERSION,
        String::from_utf8_lossy(smelt::dataset::SNAPSHOT_MAGIC),
        smelt::dataset::SNAPSHOT_VERSION,
    )
}

#[derive(Parser)]
#[command(
    name = "smelt",
    version = version_string(),
    about = "Desk-scale language-model training toolkit",
    long_about = "Desk-scale language-model training toolkit.\n\n\
        Exit codes: 0 success, 2 configuration error, 3 malformed input \
        data, 4 duplicate-content registration, 5 corrupt snapshot or \
        checkpoint, 1 any other failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    Curate(cmd_curate::CurateArgs),
    Pack(cmd_pack::PackArgs),
    Train(cmd_train::TrainArgs),
    Resume(cmd_train::ResumeArgs),
    Append(cmd_append::AppendArgs),
    Sft(cmd_tune::SftArgs),
    Dpo(cmd_tune::DpoArgs),
    Gradcheck(cmd_gradcheck::GradcheckArgs),
    Bench(cmd_bench::BenchArgs),
}

fn exit_code(err: &smelt::Error) -> i32 {
    use smelt::Error;
    match err {
        Error::Config(_) => 2,
        Error::Data(_) | Error::ShardFormat { .. } => 3,
        Error::DuplicateData { .. } => 4,
        Error::Snapshot { .. } | Error::Checkpoint(_) => 5,
        _ => 1,
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Curate(args) => cmd_curate::run(args),
        Command::Pack(args) => cmd_pack::run(args),
        Command::Train(args) => cmd_train::run_train(args),
        Command::Resume(args) => cmd_train::run_resume(args),
        Command::Append(args) => cmd_append::run(args),
        Command::Sft(args) => cmd_tune::run_sft(args),
        Command::Dpo(args) => cmd_tune::run_dpo(args),
        Command::Gradcheck(args) => cmd_gradcheck::run(args),
        Command::Bench(args) => cmd_bench::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
