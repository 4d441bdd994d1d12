//! Training objectives, each a fused differentiable node.
//!
//! All three objectives share the next-token convention: the logits row
//! at position `t` predicts `tokens[t+1]`. `tokens` may carry either the
//! same number of entries as there are logit rows (the final row then has
//! no target and is excluded) or exactly one more (every row has a
//! target — the natural shape for packed blocks of sequence length + 1).

use crate::error::{Error, Result};
use crate::tensor::Value;

/// Row-wise log-softmax denominators and probabilities, shared by all
/// losses below.
fn row_softmax(logits: &[f64], m: usize, vocab: usize) -> Vec<f64> {
    let mut probs = vec![0.0; m * vocab];
    for t in 0..m {
        let row = &logits[t * vocab..(t + 1) * vocab];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (j, &x) in row.iter().enumerate() {
            let e = (x - max).exp();
            probs[t * vocab + j] = e;
            sum += e;
        }
        for j in 0..vocab {
            probs[t * vocab + j] /= sum;
        }
    }
    probs
}

fn check_targets(tokens: &[u32], vocab: usize) -> Result<()> {
    for (pos, &id) in tokens.iter().enumerate() {
        if id as usize >= vocab {
            return Err(Error::Data(format!(
                "token id {id} at position {pos} exceeds vocab size {vocab}"
            )));
        }
    }
    Ok(())
}

/// Positions `t` with a target: `t` ranges over `0..tokens.len()-1`,
/// which must fit within the `m` logit rows.
fn prediction_count(m: usize, tokens: &[u32], op: &'static str) -> Result<usize> {
    if tokens.len() != m && tokens.len() != m + 1 {
        return Err(Error::Contract(format!(
            "{op}: {} tokens do not match {m} logit rows (expected {m} or {})",
            tokens.len(),
            m + 1
        )));
    }
    if tokens.len() < 2 {
        return Err(Error::Contract(format!(
            "{op}: need at least 2 tokens to form a next-token pair"
        )));
    }
    Ok(tokens.len() - 1)
}

/// Shared fused kernel: mean (or sum) of ±log-probabilities of the
/// selected next tokens.
///
/// `select[t]` says whether position `t` participates. `normalize`
/// divides by the participant count (losses); otherwise the raw sum of
/// log-probabilities is produced (sign +1, sequence scoring).
fn selected_logprob_node(
    logits: &Value,
    tokens: &[u32],
    select: Vec<bool>,
    normalize: bool,
    sign: f64,
    op: &'static str,
) -> Result<Value> {
    let (m, vocab) = match logits.shape() {
        [m, v] => (*m, *v),
        other => {
            return Err(Error::Shape {
                op,
                lhs: other.to_vec(),
                rhs: vec![],
            })
        }
    };
    check_targets(tokens, vocab)?;
    debug_assert_eq!(select.len(), tokens.len().saturating_sub(1));
    let count = select.iter().filter(|&&b| b).count();
    if count == 0 {
        // Constant zero: no parents, nothing to differentiate.
        return Ok(Value::scalar(0.0));
    }
    let data = logits.data();
    let probs = row_softmax(&data, m, vocab);
    drop(data);
    let mut total = 0.0;
    for (t, &on) in select.iter().enumerate() {
        if on {
            let target = tokens[t + 1] as usize;
            total += sign * probs[t * vocab + target].ln();
        }
    }
    let denom = if normalize { count as f64 } else { 1.0 };
    let out = total / denom;
    let logits_c = logits.clone();
    let targets: Vec<u32> = tokens[1..].to_vec();
    Ok(Value::from_op(
        op,
        vec![1],
        vec![out],
        vec![logits.clone()],
        Box::new(move |dy, scratch| {
            let dy = dy[0] * sign / denom;
            scratch.accumulate(&logits_c, |dl| {
                for (t, &on) in select.iter().enumerate() {
                    if !on {
                        continue;
                    }
                    let target = targets[t] as usize;
                    for j in 0..vocab {
                        let indicator = f64::from(j == target);
                        dl[t * vocab + j] += dy * (indicator - probs[t * vocab + j]);
                    }
                }
            });
        }),
    ))
}

/// Mean negative log-likelihood of each next token: position `t` is
/// scored against `tokens[t+1]`; a final row without a target is
/// excluded.
pub fn cross_entropy_shifted(logits: &Value, tokens: &[u32]) -> Result<Value> {
    let m = logits.shape()[0];
    let preds = prediction_count(m, tokens, "cross_entropy_shifted")?;
    selected_logprob_node(
        logits,
        tokens,
        vec![true; preds],
        true,
        -1.0,
        "cross_entropy_shifted",
    )
}

/// Cross-entropy averaged over response positions only: position `t`
/// contributes iff `response_mask[t + 1]` (the *target* is a response
/// token). Returns the loss and the number of scored positions; an
/// all-masked-out batch yields a constant 0 and a count of 0, which the
/// caller should surface as a warning.
pub fn sft_masked_loss(
    logits: &Value,
    tokens: &[u32],
    response_mask: &[bool],
) -> Result<(Value, usize)> {
    let m = logits.shape()[0];
    let preds = prediction_count(m, tokens, "sft_masked_loss")?;
    if response_mask.len() != tokens.len() {
        return Err(Error::Contract(format!(
            "sft_masked_loss: mask length {} does not match {} tokens",
            response_mask.len(),
            tokens.len()
        )));
    }
    let select: Vec<bool> = (0..preds).map(|t| response_mask[t + 1]).collect();
    let count = select.iter().filter(|&&b| b).count();
    let loss = selected_logprob_node(
        logits,
        tokens,
        select,
        true,
        -1.0,
        "sft_masked_loss",
    )?;
    Ok((loss, count))
}

/// Summed log-probability of the response span under the model:
/// `Σ log p(tokens[t+1] | prefix)` over positions whose target is
/// masked in. This is the per-sequence score the preference loss
/// consumes.
pub fn sequence_logprob(
    logits: &Value,
    tokens: &[u32],
    response_mask: &[bool],
) -> Result<Value> {
    let m = logits.shape()[0];
    let preds = prediction_count(m, tokens, "sequence_logprob")?;
    if response_mask.len() != tokens.len() {
        return Err(Error::Contract(format!(
            "sequence_logprob: mask length {} does not match {} tokens",
            response_mask.len(),
            tokens.len()
        )));
    }
    let select: Vec<bool> = (0..preds).map(|t| response_mask[t + 1]).collect();
    selected_logprob_node(logits, tokens, select, false, 1.0, "sequence_logprob")
}

/// Numerically stable `ln(1 + e^{-z})` with gradient `-σ(-z)`.
fn softplus_neg(z: &Value) -> Value {
    let x = z.to_vec();
    let out: Vec<f64> = x
        .iter()
        .map(|&zi| {
            let a = -zi;
            if a > 0.0 {
                a + (-a).exp().ln_1p()
            } else {
                a.exp().ln_1p()
            }
        })
        .collect();
    let zc = z.clone();
    Value::from_op(
        "softplus_neg",
        z.shape().to_vec(),
        out,
        vec![z.clone()],
        Box::new(move |dy, scratch| {
            scratch.accumulate(&zc, |dz| {
                for i in 0..dy.len() {
                    // σ(-z) computed stably on either side.
                    let a = -x[i];
                    let s = if a >= 0.0 {
                        1.0 / (1.0 + (-a).exp())
                    } else {
                        let e = a.exp();
                        e / (1.0 + e)
                    };
                    dz[i] += -s * dy[i];
                }
            });
        }),
    )
}

/// Preference objective on summed response log-probabilities:
/// `-ln σ(β · [(policy_chosen − policy_rejected) − (ref_chosen − ref_rejected)])`.
/// Non-negative, decreasing in the policy margin, and exactly `ln 2`
/// when the policy margin equals the reference margin.
pub fn dpo_loss(
    policy_chosen: &Value,
    policy_rejected: &Value,
    ref_chosen: &Value,
    ref_rejected: &Value,
    beta: f64,
) -> Result<Value> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::Config(format!(
            "preference beta must be positive, got {beta}"
        )));
    }
    let policy_margin = policy_chosen.sub(policy_rejected)?;
    let ref_margin = ref_chosen.sub(ref_rejected)?;
    let z = policy_margin.sub(&ref_margin)?.scale(beta);
    Ok(softplus_neg(&z))
}
