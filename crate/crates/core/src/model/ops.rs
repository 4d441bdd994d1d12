//! Forward operations of the transformer, each differentiable end to end.
//!
//! The dispatch/combine pair follows the soft-mixture formulation: with
//! logits `L = X·Φ`, the dispatch weights `D = softmax(L, axis 0)` are
//! column-stochastic and mix tokens into slots (`X̃ = Dᵀ·X`), each slot is
//! processed by expert `⌊slot/p⌋`, and the combine weights
//! `C = softmax(L, axis 1)` are row-stochastic and mix slot outputs back
//! into tokens (`Y = C·Ỹ`).

use crate::error::{Error, Result};
use crate::tensor::Value;

use super::{BlockParams, ExpertParams, LMParams, ModelConfig};

/// Row-wise RMS normalization with learned gain:
/// `y = x / sqrt(mean(x²) + eps) ⊙ gain`.
pub fn rms_norm(x: &Value, gain: &Value, eps: f64) -> Result<Value> {
    let (m, d) = match x.shape() {
        [m, d] => (*m, *d),
        other => {
            return Err(Error::Shape {
                op: "rms_norm",
                lhs: other.to_vec(),
                rhs: gain.shape().to_vec(),
            })
        }
    };
    if gain.shape() != [d] {
        return Err(Error::Shape {
            op: "rms_norm",
            lhs: x.shape().to_vec(),
            rhs: gain.shape().to_vec(),
        });
    }
    let xs = x.data();
    let g = gain.data();
    let mut out = vec![0.0; m * d];
    let mut inv_rms = vec![0.0; m];
    for i in 0..m {
        let row = &xs[i * d..(i + 1) * d];
        let ms = row.iter().map(|v| v * v).sum::<f64>() / d as f64;
        let r = 1.0 / (ms + eps).sqrt();
        inv_rms[i] = r;
        for j in 0..d {
            out[i * d + j] = row[j] * r * g[j];
        }
    }
    drop(xs);
    drop(g);
    let (xc, gc) = (x.clone(), gain.clone());
    Ok(Value::from_op(
        "rms_norm",
        vec![m, d],
        out,
        vec![x.clone(), gain.clone()],
        Box::new(move |dy, scratch| {
            let xs = xc.data();
            let g = gc.data();
            scratch.accumulate(&xc, |dx| {
                for i in 0..m {
                    let row = &xs[i * d..(i + 1) * d];
                    let dyrow = &dy[i * d..(i + 1) * d];
                    let r = inv_rms[i];
                    let s: f64 = (0..d).map(|k| dyrow[k] * g[k] * row[k]).sum();
                    for j in 0..d {
                        dx[i * d + j] +=
                            g[j] * dyrow[j] * r - row[j] * r * r * r * s / d as f64;
                    }
                }
            });
            scratch.accumulate(&gc, |dg| {
                for i in 0..m {
                    let row = &xs[i * d..(i + 1) * d];
                    let dyrow = &dy[i * d..(i + 1) * d];
                    let r = inv_rms[i];
                    for j in 0..d {
                        dg[j] += dyrow[j] * row[j] * r;
                    }
                }
            });
        }),
    ))
}

/// Rotary position embedding over `[seq × heads·head_dim]`, rotating each
/// head's dimension pair `(2i, 2i+1)` by `pos · theta_base^(−2i/head_dim)`.
/// Angles are computed in full 64-bit precision. Rotations are isometries,
/// so each pair's L2 norm is preserved.
pub fn rope_apply(
    x: &Value,
    heads: usize,
    positions: &[usize],
    theta_base: f64,
) -> Result<Value> {
    let (m, width) = match x.shape() {
        [m, w] => (*m, *w),
        other => {
            return Err(Error::Shape {
                op: "rope_apply",
                lhs: other.to_vec(),
                rhs: vec![],
            })
        }
    };
    if heads == 0 || width % heads != 0 {
        return Err(Error::Config(format!(
            "rope_apply: width {width} not divisible by heads {heads}"
        )));
    }
    let head_dim = width / heads;
    if head_dim % 2 != 0 {
        return Err(Error::Config(format!(
            "rope_apply: head_dim {head_dim} must be even"
        )));
    }
    if positions.len() != m {
        return Err(Error::Contract(format!(
            "rope_apply: {} positions for {m} rows",
            positions.len()
        )));
    }
    let pairs = head_dim / 2;
    // cos/sin table per (row, pair); shared across heads.
    let mut cos = vec![0.0; m * pairs];
    let mut sin = vec![0.0; m * pairs];
    for (t, &pos) in positions.iter().enumerate() {
        for i in 0..pairs {
            let angle =
                pos as f64 * theta_base.powf(-2.0 * i as f64 / head_dim as f64);
            cos[t * pairs + i] = angle.cos();
            sin[t * pairs + i] = angle.sin();
        }
    }
    #[allow(clippy::too_many_arguments)]
    fn rotate(
        src: &[f64],
        dst: &mut [f64],
        invert: bool,
        m: usize,
        heads: usize,
        head_dim: usize,
        cos: &[f64],
        sin: &[f64],
    ) {
        let width = heads * head_dim;
        let pairs = head_dim / 2;
        for t in 0..m {
            for h in 0..heads {
                let base = t * width + h * head_dim;
                for i in 0..pairs {
                    let (c, s) = (cos[t * pairs + i], sin[t * pairs + i]);
                    let s = if invert { -s } else { s };
                    let (a, b) = (src[base + 2 * i], src[base + 2 * i + 1]);
                    dst[base + 2 * i] = a * c - b * s;
                    dst[base + 2 * i + 1] = a * s + b * c;
                }
            }
        }
    }
    let src = x.data();
    let mut out = vec![0.0; m * width];
    rotate(&src, &mut out, false, m, heads, head_dim, &cos, &sin);
    drop(src);
    Ok(Value::from_op(
        "rope_apply",
        vec![m, width],
        out,
        vec![x.clone()],
        {
            let xc = x.clone();
            Box::new(move |dy, scratch| {
                // The inverse of a rotation is the rotation by −angle.
                scratch.accumulate(&xc, |dx| {
                    let mut tmp = vec![0.0; dy.len()];
                    rotate(dy, &mut tmp, true, m, heads, head_dim, &cos, &sin);
                    for (a, b) in dx.iter_mut().zip(&tmp) {
                        *a += b;
                    }
                });
            })
        },
    ))
}

/// Softmax over each row's causal prefix: row i is a distribution over
/// columns 0..=i and exactly zero beyond.
fn causal_row_softmax(scores: &Value) -> Result<Value> {
    let (m, n) = match scores.shape() {
        [m, n] if m == n => (*m, *n),
        other => {
            return Err(Error::Shape {
                op: "causal_row_softmax",
                lhs: other.to_vec(),
                rhs: vec![],
            })
        }
    };
    let x = scores.data();
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &x[i * n..i * n + i + 1];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (j, &v) in row.iter().enumerate() {
            let e = (v - max).exp();
            out[i * n + j] = e;
            sum += e;
        }
        for j in 0..=i {
            out[i * n + j] /= sum;
        }
    }
    drop(x);
    let sc = scores.clone();
    let y = out.clone();
    Ok(Value::from_op(
        "causal_row_softmax",
        vec![m, n],
        out,
        vec![scores.clone()],
        Box::new(move |dy, scratch| {
            scratch.accumulate(&sc, |dx| {
                for i in 0..m {
                    let mut dot = 0.0;
                    for j in 0..=i {
                        dot += dy[i * n + j] * y[i * n + j];
                    }
                    for j in 0..=i {
                        dx[i * n + j] += y[i * n + j] * (dy[i * n + j] - dot);
                    }
                }
            });
        }),
    ))
}

/// Row lookup: `out[t] = table[ids[t]]`, differentiable w.r.t. the table.
pub fn embedding(ids: &[u32], table: &Value) -> Result<Value> {
    let (vocab, d) = match table.shape() {
        [v, d] => (*v, *d),
        other => {
            return Err(Error::Shape {
                op: "embedding",
                lhs: other.to_vec(),
                rhs: vec![],
            })
        }
    };
    if ids.is_empty() {
        return Err(Error::Data("embedding: empty token sequence".into()));
    }
    for (pos, &id) in ids.iter().enumerate() {
        if id as usize >= vocab {
            return Err(Error::Data(format!(
                "token id {id} at position {pos} exceeds vocab size {vocab}"
            )));
        }
    }
    let m = ids.len();
    let src = table.data();
    let mut out = Vec::with_capacity(m * d);
    for &id in ids {
        out.extend_from_slice(&src[id as usize * d..(id as usize + 1) * d]);
    }
    drop(src);
    let tc = table.clone();
    let ids_owned: Vec<u32> = ids.to_vec();
    Ok(Value::from_op(
        "embedding",
        vec![m, d],
        out,
        vec![table.clone()],
        Box::new(move |dy, scratch| {
            scratch.accumulate(&tc, |dt| {
                for (t, &id) in ids_owned.iter().enumerate() {
                    let dst = &mut dt[id as usize * d..(id as usize + 1) * d];
                    let src = &dy[t * d..(t + 1) * d];
                    for (a, b) in dst.iter_mut().zip(src) {
                        *a += b;
                    }
                }
            });
        }),
    ))
}

/// Dispatch: logits `L = X·Φ`, column-stochastic `D = softmax(L, axis 0)`,
/// input slots `X̃ = Dᵀ·X`.
pub fn soft_moe_dispatch(x: &Value, phi: &Value) -> Result<(Value, Value)> {
    let logits = x.matmul(phi)?;
    let d = logits.softmax(0)?;
    let xt = d.transpose()?.matmul(x)?;
    Ok((d, xt))
}

/// Combine: row-stochastic `C = softmax(L, axis 1)`, output tokens
/// `Y = C·Ỹ`. `L` must be the same logits used for dispatch.
pub fn soft_moe_combine(logits: &Value, ytilde: &Value) -> Result<(Value, Value)> {
    let c = logits.softmax(1)?;
    let y = c.matmul(ytilde)?;
    Ok((c, y))
}

/// Expert network: the gated activation applied on both layers,
/// `h = SiLU(x·W_g1) ⊙ (x·W_u1)`, `out = SiLU(h·W_g2) ⊙ (h·W_d2)`,
/// no biases anywhere.
pub fn enhanced_ffn(h_in: &Value, expert: &ExpertParams) -> Result<Value> {
    let h = h_in
        .matmul(&expert.w_g1)?
        .silu()
        .mul(&h_in.matmul(&expert.w_u1)?)?;
    h.matmul(&expert.w_g2)?.silu().mul(&h.matmul(&expert.w_d2)?)
}

/// Shared slot routing: slot i is processed by `apply_expert(i / p, slot)`.
/// Expert inputs arrive as the contiguous row batch of that expert's slots.
fn soft_moe_route(
    x: &Value,
    phi: &Value,
    slots_per_expert: usize,
    apply_expert: &dyn Fn(usize, Value) -> Result<Value>,
) -> Result<Value> {
    let logits = x.matmul(phi)?;
    let dispatch = logits.softmax(0)?;
    let xt = dispatch.transpose()?.matmul(x)?;
    let total_slots = xt.shape()[0];
    debug_assert_eq!(total_slots % slots_per_expert, 0);
    let num_experts = total_slots / slots_per_expert;
    let mut outputs = Vec::with_capacity(num_experts);
    for e in 0..num_experts {
        let rows = xt.slice_rows(e * slots_per_expert..(e + 1) * slots_per_expert)?;
        outputs.push(apply_expert(e, rows)?);
    }
    let ytilde = Value::concat_rows(&outputs)?;
    let combine = logits.softmax(1)?;
    combine.matmul(&ytilde)
}

/// The full Soft-MoE layer of one block: dispatch → per-expert gated
/// network → combine. Fully differentiable and, by construction,
/// equivariant under permutations of the input token rows.
pub fn soft_moe_layer(
    x: &Value,
    block: &BlockParams,
    slots_per_expert: usize,
) -> Result<Value> {
    soft_moe_route(x, &block.phi, slots_per_expert, &|e, rows| {
        enhanced_ffn(&rows, &block.experts[e])
    })
}

/// Test hook: the same routing with arbitrary expert functions.
pub fn soft_moe_layer_with(
    x: &Value,
    phi: &Value,
    slots_per_expert: usize,
    apply_expert: &dyn Fn(usize, Value) -> Result<Value>,
) -> Result<Value> {
    soft_moe_route(x, phi, slots_per_expert, apply_expert)
}

/// Exact multi-head attention: QKV projection (the only biased layer),
/// rotary embedding on Q and K, scaled dot-product with a strict causal
/// mask, then the output projection.
pub fn causal_attention(
    x: &Value,
    block: &BlockParams,
    positions: &[usize],
    cfg: &ModelConfig,
) -> Result<Value> {
    let (m, d) = match x.shape() {
        [m, d] => (*m, *d),
        other => {
            return Err(Error::Shape {
                op: "causal_attention",
                lhs: other.to_vec(),
                rhs: vec![],
            })
        }
    };
    if m > cfg.max_seq_len {
        return Err(Error::Config(format!(
            "sequence length {m} exceeds max_seq_len {}",
            cfg.max_seq_len
        )));
    }
    debug_assert_eq!(d, cfg.hidden_size);
    let head_dim = cfg.head_dim();
    let qkv = x.matmul(&block.qkv_weight)?.add_row(&block.qkv_bias)?;
    let q = rope_apply(
        &qkv.slice_cols(0..d)?,
        cfg.heads,
        positions,
        cfg.rope_theta_base,
    )?;
    let k = rope_apply(
        &qkv.slice_cols(d..2 * d)?,
        cfg.heads,
        positions,
        cfg.rope_theta_base,
    )?;
    let v = qkv.slice_cols(2 * d..3 * d)?;
    let scale = 1.0 / (head_dim as f64).sqrt();
    let mut per_head = Vec::with_capacity(cfg.heads);
    for h in 0..cfg.heads {
        let cols = h * head_dim..(h + 1) * head_dim;
        let qh = q.slice_cols(cols.clone())?;
        let kh = k.slice_cols(cols.clone())?;
        let vh = v.slice_cols(cols)?;
        let scores = qh.matmul(&kh.transpose()?)?.scale(scale);
        let probs = causal_row_softmax(&scores)?;
        per_head.push(probs.matmul(&vh)?);
    }
    Value::concat_cols(&per_head)?.matmul(&block.out_proj)
}

/// Pre-Norm residual block: `h = x + attn(norm(x))`, then
/// `y = h + moe(norm(h))`.
pub fn transformer_block(
    x: &Value,
    block: &BlockParams,
    positions: &[usize],
    cfg: &ModelConfig,
) -> Result<Value> {
    let attn_in = rms_norm(x, &block.norm_attn_gain, cfg.norm_eps)?;
    let h = x.add(&causal_attention(&attn_in, block, positions, cfg)?)?;
    let ffn_in = rms_norm(&h, &block.norm_ffn_gain, cfg.norm_eps)?;
    h.add(&soft_moe_layer(&ffn_in, block, cfg.slots_per_expert)?)
}

/// Embed → blocks → final norm → logits. When embeddings are tied the
/// head is the embedding transposed.
pub fn lm_forward(token_ids: &[u32], params: &LMParams) -> Result<Value> {
    let cfg = &params.config;
    if token_ids.len() > cfg.max_seq_len {
        return Err(Error::Config(format!(
            "sequence length {} exceeds max_seq_len {}",
            token_ids.len(),
            cfg.max_seq_len
        )));
    }
    let positions: Vec<usize> = (0..token_ids.len()).collect();
    let mut h = embedding(token_ids, &params.embedding)?;
    for block in &params.blocks {
        h = transformer_block(&h, block, &positions, cfg)?;
    }
    let h = rms_norm(&h, &params.final_norm_gain, cfg.norm_eps)?;
    match &params.head {
        Some(head) => h.matmul(head),
        None => h.matmul(&params.embedding.transpose()?),
    }
}
