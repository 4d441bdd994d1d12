//! `smelt bench`: informational throughput measurement.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use smelt::dataset::{open_iterator, write_shard};
use smelt::model::{count_parameters, LMParams, ModelConfig};
use smelt::train::{train_loop, LoopOptions, OptimizerState, TrainConfig};
use smelt::{Error, Result};

/// Run a few optimizer steps on synthetic data and report tokens per
/// second plus a rough peak-memory estimate. All numbers are
/// informational; nothing is asserted against a target. Losses depend
/// only on --seed, so identical invocations print identical loss lines.
#[derive(Args)]
pub struct BenchArgs {
    /// Model configuration JSON; omitted, a built-in tiny model is used.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Optimizer steps to measure. 0 prints the header only.
    #[arg(long, default_value_t = 3)]
    steps: u64,
    /// Sequences per optimizer step.
    #[arg(long, default_value_t = 4)]
    micro_batch: usize,
    /// Training sequence length; defaults to 64 capped at the model's
    /// maximum.
    #[arg(long)]
    seq_len: Option<usize>,
    /// Synthetic-token seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// SplitMix64 step: a tiny, well-distributed generator for the synthetic
/// token stream.
fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Rough resident-set estimate: parameters carry value, gradient, and
/// two optimizer moments; activations scale with batch, sequence length,
/// width, depth, and the logits.
fn memory_estimate_bytes(cfg: &ModelConfig, micro_batch: usize, seq_len: usize) -> u64 {
    let params = count_parameters(cfg) as u64 * 4 * 8;
    let tokens = (micro_batch * seq_len) as u64;
    let activations = tokens * (cfg.hidden_size * cfg.layers * 32 + cfg.vocab_size * 3) as u64 * 8;
    params + activations
}

pub fn run(args: BenchArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(path) => crate::util::read_model_config(path)?,
        None => ModelConfig::tiny(),
    };
    let seq_len = args.seq_len.unwrap_or(64.min(cfg.max_seq_len));
    if seq_len == 0 || seq_len > cfg.max_seq_len {
        return Err(Error::Config(format!(
            "seq_len {} must lie in 1..={}",
            seq_len, cfg.max_seq_len
        )));
    }
    if args.micro_batch == 0 {
        return Err(Error::Config("micro_batch must be positive".into()));
    }

    println!(
        "bench: layers={} hidden={} experts={} vocab={} seq_len={} micro_batch={} params={}",
        cfg.layers,
        cfg.hidden_size,
        cfg.num_experts,
        cfg.vocab_size,
        seq_len,
        args.micro_batch,
        count_parameters(&cfg)
    );
    println!(
        "peak memory estimate: {:.1} MiB",
        memory_estimate_bytes(&cfg, args.micro_batch, seq_len) as f64 / (1024.0 * 1024.0)
    );
    if args.steps == 0 {
        return Ok(());
    }

    // Stage exactly the blocks the run consumes as a real shard, so the
    // measurement covers the whole training path including block IO.
    let block_size = seq_len + 1;
    let blocks = args.steps as usize * args.micro_batch;
    let mut state = args.seed;
    let tokens: Vec<u32> = (0..blocks * block_size)
        .map(|_| (splitmix(&mut state) % cfg.vocab_size as u64) as u32)
        .collect();
    let staging = tempfile::tempdir()?;
    let shard = staging.path().join("bench-000000.slpk");
    write_shard(&shard, block_size, &tokens, false)?;

    let params = LMParams::init(&cfg, 7);
    let mut optimizer = OptimizerState::new(&params.params());
    let mut iter = open_iterator(&[shard], args.seed)?;
    let train = TrainConfig {
        warmup_steps: 1,
        grad_accum_steps: 1,
        micro_batch: args.micro_batch,
        seq_len,
        seed: args.seed,
        ..TrainConfig::pretrain(args.steps + 1)
    };

    let mut observer = |step: u64, _lr: f64, loss: f64| println!("step={step} loss={loss}");
    let start = Instant::now();
    let report = train_loop(
        &params,
        &mut optimizer,
        &mut iter,
        &train,
        &LoopOptions::plain(args.steps),
        Some(&mut observer),
    )?;
    let elapsed = start.elapsed().as_secs_f64();

    let trained_tokens = report.losses.len() * args.micro_batch * seq_len;
    println!(
        "throughput: {:.0} tokens/s ({} tokens in {:.3} s)",
        trained_tokens as f64 / elapsed,
        trained_tokens,
        elapsed
    );
    Ok(())
}
