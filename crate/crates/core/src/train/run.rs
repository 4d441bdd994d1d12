//! The three training loops: next-token pretraining over packed blocks,
//! masked supervised fine-tuning over chat samples, and preference tuning
//! over chosen/rejected pairs.
//!
//! All loops share the same optimizer-step skeleton: zero the gradients,
//! accumulate `grad_accum_steps × micro_batch` scaled backward passes,
//! clip the global gradient norm, take one AdamW step at the scheduled
//! rate, and report the mean loss. Determinism is absolute — the same
//! inputs (including a restored checkpoint) produce bitwise-identical
//! parameter trajectories.

use std::path::PathBuf;

use crate::dataset::IteratorState;
use crate::error::{Error, Result};
use crate::model::{lm_forward, BlockParams, ExpertParams, LMParams};
use crate::rng::SplitMix64;
use crate::tensor::Value;
use crate::tokenizer::ChatSample;

use super::checkpoint::save_checkpoint;
use super::loss::{cross_entropy_shifted, dpo_loss, sequence_logprob, sft_masked_loss};
use super::{adamw_step, clip_global_norm, cosine_lr, OptimizerState, TrainConfig};

/// Knobs of a single [`train_loop`] invocation (as opposed to the
/// [`TrainConfig`] hyperparameters, which persist across resumes).
#[derive(Debug, Clone)]
pub struct LoopOptions {
    /// Optimizer steps to run in this invocation. The schedule horizon
    /// lives in [`TrainConfig::total_steps`]; running fewer steps here
    /// simply stops the trajectory early.
    pub steps: u64,
    /// Start a fresh epoch (reshuffled) when the data runs out instead of
    /// stopping.
    pub wrap: bool,
    /// Save a checkpoint every this many optimizer steps.
    pub checkpoint_every: Option<u64>,
    /// Directory receiving `step-NNNNNN` checkpoint subdirectories.
    pub checkpoint_dir: Option<PathBuf>,
}

impl LoopOptions {
    /// Run `steps` steps with no checkpointing, stopping at data
    /// exhaustion.
    pub fn plain(steps: u64) -> Self {
        LoopOptions {
            steps,
            wrap: false,
            checkpoint_every: None,
            checkpoint_dir: None,
        }
    }
}

/// What a loop actually did.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopReport {
    /// Mean loss of each completed optimizer step.
    pub losses: Vec<f64>,
    /// Completed optimizer steps over the whole trajectory (equals the
    /// optimizer's step counter).
    pub final_step: u64,
    /// Sequences (or preference pairs) skipped because their mask scored
    /// no positions.
    pub skipped: usize,
}

/// Per-step observer: `(completed_step, learning_rate, mean_loss)`.
pub type StepObserver<'a> = &'a mut dyn FnMut(u64, f64, f64);

fn checkpoint_if_due(
    opts: &LoopOptions,
    params: &LMParams,
    optimizer: &OptimizerState,
    cfg: &TrainConfig,
    snapshot: &[u8],
) -> Result<()> {
    let Some(every) = opts.checkpoint_every else {
        return Ok(());
    };
    let Some(dir) = &opts.checkpoint_dir else {
        return Err(Error::Config(
            "checkpoint_every set but checkpoint_dir is missing".into(),
        ));
    };
    if every == 0 {
        return Err(Error::Config("checkpoint_every must be at least 1".into()));
    }
    if optimizer.step % every == 0 {
        save_checkpoint(
            &dir.join(format!("step-{:06}", optimizer.step)),
            params,
            optimizer,
            cfg,
            snapshot,
        )?;
    }
    Ok(())
}

/// Next-token pretraining over packed blocks.
///
/// Each block of `seq_len + 1` tokens feeds the first `seq_len` tokens to
/// the model and scores every position against the following token. The
/// loss of each sequence is scaled by `1 / (micro_batch ·
/// grad_accum_steps)` before its backward pass, so the accumulated
/// gradient is the mean over the whole global batch. When the iterator
/// runs dry and `wrap` is off, the loop stops cleanly before starting the
/// partial step.
pub fn train_loop(
    params: &LMParams,
    optimizer: &mut OptimizerState,
    iter: &mut IteratorState,
    cfg: &TrainConfig,
    opts: &LoopOptions,
    mut on_step: Option<StepObserver<'_>>,
) -> Result<LoopReport> {
    cfg.validate()?;
    if cfg.seq_len > params.config.max_seq_len {
        return Err(Error::Config(format!(
            "seq_len {} exceeds the model's max_seq_len {}",
            cfg.seq_len, params.config.max_seq_len
        )));
    }
    let list = params.params();
    let per_step = cfg.grad_accum_steps * cfg.micro_batch;
    let scale = 1.0 / per_step as f64;
    let mut losses = Vec::new();

    for _ in 0..opts.steps {
        if !opts.wrap && iter.len() - iter.cursor() < per_step {
            break; // not enough data for a full step: stop cleanly
        }
        params.zero_grad();
        let mut step_loss = 0.0;
        for _ in 0..per_step {
            let block = iter
                .next_block(opts.wrap)?
                .ok_or_else(|| Error::Data("data iterator is empty".into()))?;
            if block.len() != cfg.seq_len + 1 {
                return Err(Error::Config(format!(
                    "shard blocks hold {} tokens but seq_len {} requires {}",
                    block.len(),
                    cfg.seq_len,
                    cfg.seq_len + 1
                )));
            }
            let logits = lm_forward(&block[..block.len() - 1], params)?;
            let loss = cross_entropy_shifted(&logits, &block)?;
            step_loss += loss.item();
            loss.scale(scale).backward()?;
        }
        clip_global_norm(&list, cfg.clip_norm);
        let lr = cosine_lr(optimizer.step + 1, cfg);
        adamw_step(&list, optimizer, lr, cfg)?;
        let mean = step_loss * scale;
        losses.push(mean);
        if let Some(observer) = on_step.as_deref_mut() {
            observer(optimizer.step, lr, mean);
        }
        checkpoint_if_due(opts, params, optimizer, cfg, &iter.snapshot())?;
    }

    Ok(LoopReport {
        losses,
        final_step: optimizer.step,
        skipped: 0,
    })
}

/// Endless shuffled sampling over `0..n`: each epoch is a fresh
/// permutation drawn from the live generator.
struct CyclicSampler {
    order: Vec<usize>,
    cursor: usize,
    rng: SplitMix64,
}

impl CyclicSampler {
    fn new(n: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        CyclicSampler {
            order,
            cursor: 0,
            rng,
        }
    }

    fn next(&mut self) -> usize {
        if self.cursor == self.order.len() {
            self.rng.shuffle(&mut self.order);
            self.cursor = 0;
        }
        let i = self.order[self.cursor];
        self.cursor += 1;
        i
    }
}

/// Input length cap: a sample longer than the model window keeps its
/// first `max_seq_len + 1` tokens (the final one is a target only).
fn clip_sample(sample: &ChatSample, max_seq_len: usize) -> (&[u32], &[bool]) {
    let keep = sample.tokens.len().min(max_seq_len + 1);
    (&sample.tokens[..keep], &sample.response_mask[..keep])
}

fn scores_nothing(tokens: &[u32], mask: &[bool]) -> bool {
    tokens.len() < 2 || !mask[1..].iter().any(|&b| b)
}

/// Supervised fine-tuning: cross-entropy over response positions only.
///
/// Samples are drawn in shuffled epoch order (seeded by
/// [`TrainConfig::seed`]); a sample whose mask scores no position — an
/// empty response, or a response clipped away entirely by the context
/// window — contributes nothing and is counted in
/// [`LoopReport::skipped`].
pub fn sft_step_batches(
    params: &LMParams,
    optimizer: &mut OptimizerState,
    samples: &[ChatSample],
    cfg: &TrainConfig,
    steps: u64,
    mut on_step: Option<StepObserver<'_>>,
) -> Result<LoopReport> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Data("no fine-tuning samples provided".into()));
    }
    for (i, s) in samples.iter().enumerate() {
        if s.response_mask.len() != s.tokens.len() {
            return Err(Error::Data(format!(
                "sample {i}: mask length {} does not match {} tokens",
                s.response_mask.len(),
                s.tokens.len()
            )));
        }
    }
    let list = params.params();
    let per_step = cfg.grad_accum_steps * cfg.micro_batch;
    let scale = 1.0 / per_step as f64;
    let mut sampler = CyclicSampler::new(samples.len(), cfg.seed);
    let mut losses = Vec::new();
    let mut skipped = 0;

    for _ in 0..steps {
        params.zero_grad();
        let mut step_loss = 0.0;
        let mut scored = 0usize;
        for _ in 0..per_step {
            let (tokens, mask) = clip_sample(&samples[sampler.next()], params.config.max_seq_len);
            if scores_nothing(tokens, mask) {
                skipped += 1;
                continue;
            }
            let logits = lm_forward(&tokens[..tokens.len() - 1], params)?;
            let (loss, _) = sft_masked_loss(&logits, tokens, mask)?;
            step_loss += loss.item();
            scored += 1;
            loss.scale(scale).backward()?;
        }
        clip_global_norm(&list, cfg.clip_norm);
        let lr = cosine_lr(optimizer.step + 1, cfg);
        adamw_step(&list, optimizer, lr, cfg)?;
        let mean = if scored == 0 {
            0.0
        } else {
            step_loss / scored as f64
        };
        losses.push(mean);
        if let Some(observer) = on_step.as_deref_mut() {
            observer(optimizer.step, lr, mean);
        }
    }

    Ok(LoopReport {
        losses,
        final_step: optimizer.step,
        skipped,
    })
}

/// A chosen/rejected response pair sharing a prompt.
#[derive(Debug, Clone)]
pub struct PreferencePair {
    pub chosen: ChatSample,
    pub rejected: ChatSample,
}

/// Detached copy of the parameters: same data, no gradient tracking, so
/// backward passes never traverse the reference model's graph.
fn frozen_copy(params: &LMParams) -> LMParams {
    let freeze = |v: &Value| Value::new(v.shape(), v.to_vec(), false).expect("shape is valid");
    LMParams {
        config: params.config.clone(),
        embedding: freeze(&params.embedding),
        blocks: params
            .blocks
            .iter()
            .map(|b| BlockParams {
                qkv_weight: freeze(&b.qkv_weight),
                qkv_bias: freeze(&b.qkv_bias),
                out_proj: freeze(&b.out_proj),
                phi: freeze(&b.phi),
                experts: b
                    .experts
                    .iter()
                    .map(|e| ExpertParams {
                        w_g1: freeze(&e.w_g1),
                        w_u1: freeze(&e.w_u1),
                        w_g2: freeze(&e.w_g2),
                        w_d2: freeze(&e.w_d2),
                    })
                    .collect(),
                norm_attn_gain: freeze(&b.norm_attn_gain),
                norm_ffn_gain: freeze(&b.norm_ffn_gain),
            })
            .collect(),
        final_norm_gain: freeze(&params.final_norm_gain),
        head: params.head.as_ref().map(freeze),
    }
}

/// Preference tuning: push the policy's chosen-over-rejected margin above
/// the reference model's.
///
/// The reference is a frozen copy of the policy taken at entry, so the
/// very first step starts from a zero margin difference and a loss of
/// exactly ln 2 per pair. Pairs where either response scores no position
/// are skipped.
pub fn dpo_step_batches(
    params: &LMParams,
    optimizer: &mut OptimizerState,
    pairs: &[PreferencePair],
    cfg: &TrainConfig,
    steps: u64,
    mut on_step: Option<StepObserver<'_>>,
) -> Result<LoopReport> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::Data("no preference pairs provided".into()));
    }
    for (i, p) in pairs.iter().enumerate() {
        for (side, s) in [("chosen", &p.chosen), ("rejected", &p.rejected)] {
            if s.response_mask.len() != s.tokens.len() {
                return Err(Error::Data(format!(
                    "pair {i} ({side}): mask length {} does not match {} tokens",
                    s.response_mask.len(),
                    s.tokens.len()
                )));
            }
        }
    }
    let reference = frozen_copy(params);
    let list = params.params();
    let per_step = cfg.grad_accum_steps * cfg.micro_batch;
    let scale = 1.0 / per_step as f64;
    let mut sampler = CyclicSampler::new(pairs.len(), cfg.seed);
    let mut losses = Vec::new();
    let mut skipped = 0;

    for _ in 0..steps {
        params.zero_grad();
        let mut step_loss = 0.0;
        let mut scored = 0usize;
        for _ in 0..per_step {
            let pair = &pairs[sampler.next()];
            let max = params.config.max_seq_len;
            let (ct, cm) = clip_sample(&pair.chosen, max);
            let (rt, rm) = clip_sample(&pair.rejected, max);
            if scores_nothing(ct, cm) || scores_nothing(rt, rm) {
                skipped += 1;
                continue;
            }
            let score = |model: &LMParams, tokens: &[u32], mask: &[bool]| -> Result<Value> {
                let logits = lm_forward(&tokens[..tokens.len() - 1], model)?;
                sequence_logprob(&logits, tokens, mask)
            };
            let pc = score(params, ct, cm)?;
            let pr = score(params, rt, rm)?;
            let rc = score(&reference, ct, cm)?;
            let rr = score(&reference, rt, rm)?;
            let loss = dpo_loss(&pc, &pr, &rc, &rr, cfg.pref_beta)?;
            step_loss += loss.item();
            scored += 1;
            loss.scale(scale).backward()?;
        }
        clip_global_norm(&list, cfg.clip_norm);
        let lr = cosine_lr(optimizer.step + 1, cfg);
        adamw_step(&list, optimizer, lr, cfg)?;
        let mean = if scored == 0 {
            0.0
        } else {
            step_loss / scored as f64
        };
        losses.push(mean);
        if let Some(observer) = on_step.as_deref_mut() {
            observer(optimizer.step, lr, mean);
        }
    }

    Ok(LoopReport {
        losses,
        final_step: optimizer.step,
        skipped,
    })
}
