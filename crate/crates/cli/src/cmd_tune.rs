//! `smelt sft` and `smelt dpo`: fine-tuning over chat-formatted JSONL.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use smelt::model::LMParams;
use smelt::tokenizer::{encode_chat, ByteTokenizer, ChatSample};
use smelt::train::{
    dpo_step_batches, load_checkpoint, save_checkpoint, sft_step_batches, OptimizerState,
    PreferencePair, TrainConfig,
};
use smelt::{Error, Result};

use crate::util::{print_step, read_run_config};

/// Supervised fine-tuning on prompt/response pairs. Loss is scored on
/// response tokens only. The optimizer starts fresh at step 0 with the
/// config's schedule; parameters come from --checkpoint when given,
/// otherwise from a fresh initialization.
#[derive(Args)]
pub struct SftArgs {
    /// Run configuration: JSON with "model" and "train" sections.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Chat samples: JSONL lines {"prompt": ..., "response": ...}.
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Optimizer steps to run.
    #[arg(long)]
    steps: u64,
    /// Start from this checkpoint's parameters instead of fresh ones.
    #[arg(long, value_name = "DIR", conflicts_with = "init_seed")]
    checkpoint: Option<PathBuf>,
    /// Fresh-parameter initialization seed.
    #[arg(long)]
    init_seed: Option<u64>,
    /// Save the tuned bundle to this directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

/// Preference tuning on chosen/rejected response pairs sharing a prompt.
/// Flags are identical to `sft`; data lines carry
/// {"prompt": ..., "chosen": ..., "rejected": ...}.
#[derive(Args)]
pub struct DpoArgs {
    #[command(flatten)]
    common: SftArgs,
}

#[derive(Deserialize)]
struct ChatLine {
    prompt: String,
    response: String,
}

#[derive(Deserialize)]
struct PairLine {
    prompt: String,
    chosen: String,
    rejected: String,
}

fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| (i + 1, line.to_string()))
        .collect())
}

fn parse_line<'a, T: Deserialize<'a>>(path: &Path, number: usize, line: &'a str) -> Result<T> {
    serde_json::from_str(line)
        .map_err(|e| Error::Data(format!("{}: line {number}: {e}", path.display())))
}

fn read_chat_samples(path: &Path) -> Result<Vec<ChatSample>> {
    let tokenizer = ByteTokenizer;
    data_lines(path)?
        .iter()
        .map(|(number, line)| {
            let parsed: ChatLine = parse_line(path, *number, line)?;
            Ok(encode_chat(&tokenizer, &parsed.prompt, &parsed.response))
        })
        .collect()
}

fn read_preference_pairs(path: &Path) -> Result<Vec<PreferencePair>> {
    let tokenizer = ByteTokenizer;
    data_lines(path)?
        .iter()
        .map(|(number, line)| {
            let parsed: PairLine = parse_line(path, *number, line)?;
            Ok(PreferencePair {
                chosen: encode_chat(&tokenizer, &parsed.prompt, &parsed.chosen),
                rejected: encode_chat(&tokenizer, &parsed.prompt, &parsed.rejected),
            })
        })
        .collect()
}

/// Resolved starting state: parameters plus the iterator snapshot that
/// rides along into any saved bundle (the pretraining data position when
/// starting from a checkpoint, an empty one otherwise).
struct Start {
    params: LMParams,
    snapshot: Vec<u8>,
}

fn resolve_start(args: &SftArgs, expected: &smelt::model::ModelConfig) -> Result<Start> {
    if ByteTokenizer.vocab_size() > expected.vocab_size {
        return Err(Error::Config(format!(
            "model vocab_size {} is smaller than the tokenizer's {}",
            expected.vocab_size,
            ByteTokenizer.vocab_size()
        )));
    }
    match &args.checkpoint {
        Some(dir) => {
            let bundle = load_checkpoint(dir)?;
            if bundle.params.config != *expected {
                return Err(Error::Config(format!(
                    "model section of {} does not match the checkpoint's model",
                    args.config.display()
                )));
            }
            Ok(Start {
                snapshot: bundle.iterator_snapshot,
                params: bundle.params,
            })
        }
        None => {
            let seed = args.init_seed.unwrap_or(42);
            Ok(Start {
                params: LMParams::init(expected, seed),
                snapshot: smelt::dataset::open_iterator(&[], 0)?.snapshot(),
            })
        }
    }
}

fn finish_tune(
    args: &SftArgs,
    start: &Start,
    optimizer: &OptimizerState,
    train: &TrainConfig,
    steps_run: usize,
    skipped: usize,
) -> Result<()> {
    if skipped > 0 {
        eprintln!("warning: {skipped} samples scored no positions and were skipped");
    }
    if let Some(dir) = &args.out {
        save_checkpoint(dir, &start.params, optimizer, train, &start.snapshot)?;
        eprintln!(
            "ran {steps_run} steps; tuned bundle: {}",
            dir.display()
        );
    } else {
        eprintln!("ran {steps_run} steps");
    }
    Ok(())
}

pub fn run_sft(args: SftArgs) -> Result<()> {
    let cfg = read_run_config(&args.config)?;
    let start = resolve_start(&args, &cfg.model)?;
    let samples = read_chat_samples(&args.data)?;
    let mut optimizer = OptimizerState::new(&start.params.params());
    let mut observer = print_step;
    let report = sft_step_batches(
        &start.params,
        &mut optimizer,
        &samples,
        &cfg.train,
        args.steps,
        Some(&mut observer),
    )?;
    finish_tune(
        &args,
        &start,
        &optimizer,
        &cfg.train,
        report.losses.len(),
        report.skipped,
    )
}

pub fn run_dpo(args: DpoArgs) -> Result<()> {
    let args = args.common;
    let cfg = read_run_config(&args.config)?;
    let start = resolve_start(&args, &cfg.model)?;
    let pairs = read_preference_pairs(&args.data)?;
    let mut optimizer = OptimizerState::new(&start.params.params());
    let mut observer = print_step;
    let report = dpo_step_batches(
        &start.params,
        &mut optimizer,
        &pairs,
        &cfg.train,
        args.steps,
        Some(&mut observer),
    )?;
    finish_tune(
        &args,
        &start,
        &optimizer,
        &cfg.train,
        report.losses.len(),
        report.skipped,
    )
}
