//! `smelt append`: register new shards into a checkpoint's iterator.

use std::path::PathBuf;

use clap::Args;
use smelt::dataset::IteratorState;
use smelt::train::{load_checkpoint, save_checkpoint};
use smelt::Result;

/// Add packed shards to a run mid-flight. Blocks already consumed keep
/// their positions; the unseen remainder and the new blocks are
/// reshuffled together, so nothing is repeated or lost. A shard whose
/// content digest is already registered is rejected.
#[derive(Args)]
pub struct AppendArgs {
    /// Checkpoint bundle to extend.
    #[arg(long, value_name = "DIR")]
    checkpoint: PathBuf,
    /// New shard file; repeat the flag for several.
    #[arg(long = "shard", value_name = "FILE", required = true)]
    shards: Vec<PathBuf>,
    /// Directory receiving the extended bundle.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

pub fn run(args: AppendArgs) -> Result<()> {
    let bundle = load_checkpoint(&args.checkpoint)?;
    let mut iter = IteratorState::restore(&bundle.iterator_snapshot)?;
    iter.append_shards(&args.shards)?;
    save_checkpoint(
        &args.out,
        &bundle.params,
        &bundle.optimizer,
        &bundle.train_config,
        &iter.snapshot(),
    )?;
    println!(
        "append: {} shards added, {} blocks total, cursor {}, epoch {}",
        args.shards.len(),
        iter.len(),
        iter.cursor(),
        iter.epoch()
    );
    eprintln!("extended bundle: {}", args.out.display());
    Ok(())
}
