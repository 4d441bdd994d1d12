//! `smelt train` and `smelt resume`: pretraining runs over packed shards.

use std::path::PathBuf;

use clap::Args;
use smelt::dataset::{open_iterator, IteratorState};
use smelt::model::LMParams;
use smelt::train::{load_checkpoint, save_checkpoint, train_loop, LoopOptions, OptimizerState};
use smelt::Result;

use crate::util::{print_step, read_run_config};

/// Pretrain from fresh parameters. Prints one `step=` line per optimizer
/// step and always writes the final state to `<checkpoint-dir>/final`.
#[derive(Args)]
pub struct TrainArgs {
    /// Run configuration: JSON with "model" and "train" sections.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Shard file to train on; repeat the flag for several.
    #[arg(long = "data", value_name = "FILE", required = true)]
    data: Vec<PathBuf>,
    /// Optimizer steps to run now (the schedule horizon is the config's
    /// total_steps).
    #[arg(long)]
    steps: u64,
    /// Checkpoint directory: the final state lands in `<dir>/final`,
    /// periodic saves in `<dir>/step-NNNNNN`.
    #[arg(long, value_name = "DIR")]
    checkpoint_dir: PathBuf,
    /// Also save a checkpoint every K optimizer steps.
    #[arg(long, value_name = "K")]
    checkpoint_every: Option<u64>,
    /// Parameter initialization seed.
    #[arg(long, default_value_t = 42)]
    init_seed: u64,
    /// Data-order shuffle seed.
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    /// Reshuffle and continue when the data runs out instead of stopping.
    #[arg(long)]
    wrap: bool,
}

/// Continue a run from a checkpoint bundle: parameters, optimizer
/// moments, schedule position, and the exact data-iterator state all
/// come from the bundle, so the continued trajectory matches an
/// uninterrupted one step for step.
#[derive(Args)]
pub struct ResumeArgs {
    /// Checkpoint bundle directory (as written by `train`).
    #[arg(long, value_name = "DIR")]
    checkpoint: PathBuf,
    /// Optimizer steps to run now.
    #[arg(long)]
    steps: u64,
    /// Save checkpoints here (final state in `<dir>/final`); omit to run
    /// without saving.
    #[arg(long, value_name = "DIR")]
    checkpoint_dir: Option<PathBuf>,
    /// Also save a checkpoint every K optimizer steps.
    #[arg(long, value_name = "K")]
    checkpoint_every: Option<u64>,
    /// Reshuffle and continue when the data runs out instead of stopping.
    #[arg(long)]
    wrap: bool,
}

fn finish(
    report_steps: usize,
    skipped: usize,
    final_step: u64,
    saved: Option<&std::path::Path>,
) {
    if skipped > 0 {
        eprintln!("warning: {skipped} sequences scored no positions and were skipped");
    }
    match saved {
        Some(dir) => eprintln!(
            "ran {report_steps} steps (optimizer at step {final_step}); checkpoint: {}",
            dir.display()
        ),
        None => eprintln!("ran {report_steps} steps (optimizer at step {final_step})"),
    }
}

pub fn run_train(args: TrainArgs) -> Result<()> {
    let cfg = read_run_config(&args.config)?;
    let params = LMParams::init(&cfg.model, args.init_seed);
    let mut optimizer = OptimizerState::new(&params.params());
    let mut iter = open_iterator(&args.data, args.data_seed)?;

    let opts = LoopOptions {
        steps: args.steps,
        wrap: args.wrap,
        checkpoint_every: args.checkpoint_every,
        checkpoint_dir: args
            .checkpoint_every
            .map(|_| args.checkpoint_dir.clone()),
    };
    let mut observer = print_step;
    let report = train_loop(
        &params,
        &mut optimizer,
        &mut iter,
        &cfg.train,
        &opts,
        Some(&mut observer),
    )?;

    let final_dir = args.checkpoint_dir.join("final");
    save_checkpoint(&final_dir, &params, &optimizer, &cfg.train, &iter.snapshot())?;
    finish(
        report.losses.len(),
        report.skipped,
        report.final_step,
        Some(&final_dir),
    );
    Ok(())
}

pub fn run_resume(args: ResumeArgs) -> Result<()> {
    let bundle = load_checkpoint(&args.checkpoint)?;
    let mut optimizer = bundle.optimizer;
    let mut iter = IteratorState::restore(&bundle.iterator_snapshot)?;

    let opts = LoopOptions {
        steps: args.steps,
        wrap: args.wrap,
        checkpoint_every: args.checkpoint_every,
        checkpoint_dir: args
            .checkpoint_every
            .and(args.checkpoint_dir.clone()),
    };
    let mut observer = print_step;
    let report = train_loop(
        &bundle.params,
        &mut optimizer,
        &mut iter,
        &bundle.train_config,
        &opts,
        Some(&mut observer),
    )?;

    let final_dir = match &args.checkpoint_dir {
        Some(dir) => {
            let final_dir = dir.join("final");
            save_checkpoint(
                &final_dir,
                &bundle.params,
                &optimizer,
                &bundle.train_config,
                &iter.snapshot(),
            )?;
            Some(final_dir)
        }
        None => None,
    };
    finish(
        report.losses.len(),
        report.skipped,
        report.final_step,
        final_dir.as_deref(),
    );
    Ok(())
}
