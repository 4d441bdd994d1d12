//! Soft-MoE transformer: configuration, parameters, and the parameter
//! counter.
//!
//! The block is Pre-Norm: `x + attn(rms_norm(x))` followed by
//! `h + moe(rms_norm(h))`. Attention is exact multi-head attention with
//! RoPE and a bias on the QKV projection only; the FFN layer is a Soft
//! Mixture of Experts whose experts are double-SwiGLU networks (the gated
//! activation applied to both MLP layers).

mod ops;

pub use ops::{
    causal_attention, embedding, enhanced_ffn, lm_forward, rms_norm, rope_apply,
    soft_moe_combine, soft_moe_dispatch, soft_moe_layer, soft_moe_layer_with,
    transformer_block,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::{InitScheme, Value};

fn default_rope_theta() -> f64 {
    10_000.0
}

fn default_norm_eps() -> f64 {
    1e-6
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layers: usize,
    pub heads: usize,
    pub kv_heads: usize,
    pub num_experts: usize,
    pub slots_per_expert: usize,
    pub hidden_size: usize,
    pub intermediate_size: usize,
    pub vocab_size: usize,
    pub max_seq_len: usize,
    #[serde(default = "default_rope_theta")]
    pub rope_theta_base: f64,
    #[serde(default = "default_norm_eps")]
    pub norm_eps: f64,
    #[serde(default)]
    pub tie_embeddings: bool,
}

impl ModelConfig {
    /// The shipped full-scale configuration (never trained in tests; used
    /// only for parameter accounting).
    pub fn full_scale() -> Self {
        Self {
            layers: 18,
            heads: 32,
            kv_heads: 32,
            num_experts: 6,
            slots_per_expert: 1,
            hidden_size: 1792,
            intermediate_size: 1792,
            vocab_size: 151_936,
            max_seq_len: 2048,
            rope_theta_base: default_rope_theta(),
            norm_eps: default_norm_eps(),
            tie_embeddings: false,
        }
    }

    /// A proportionally shrunk configuration for fast tests.
    pub fn tiny() -> Self {
        Self {
            layers: 2,
            heads: 2,
            kv_heads: 2,
            num_experts: 2,
            slots_per_expert: 1,
            hidden_size: 8,
            intermediate_size: 8,
            vocab_size: 17,
            max_seq_len: 16,
            rope_theta_base: default_rope_theta(),
            norm_eps: default_norm_eps(),
            tie_embeddings: false,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_size / self.heads
    }

    pub fn slots(&self) -> usize {
        self.num_experts * self.slots_per_expert
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("layers", self.layers),
            ("heads", self.heads),
            ("kv_heads", self.kv_heads),
            ("num_experts", self.num_experts),
            ("slots_per_expert", self.slots_per_expert),
            ("hidden_size", self.hidden_size),
            ("intermediate_size", self.intermediate_size),
            ("vocab_size", self.vocab_size),
            ("max_seq_len", self.max_seq_len),
        ];
        for (name, v) in counts {
            if v < 1 {
                return Err(Error::Config(format!("{name} must be >= 1, got {v}")));
            }
        }
        if self.hidden_size % self.heads != 0 {
            return Err(Error::Config(format!(
                "hidden_size {} not divisible by heads {}",
                self.hidden_size, self.heads
            )));
        }
        if self.heads % self.kv_heads != 0 {
            return Err(Error::Config(format!(
                "heads {} not divisible by kv_heads {}",
                self.heads, self.kv_heads
            )));
        }
        if self.kv_heads != self.heads {
            return Err(Error::Config(format!(
                "grouped-query attention is not supported: kv_heads {} must equal heads {}",
                self.kv_heads, self.heads
            )));
        }
        if self.head_dim() % 2 != 0 {
            return Err(Error::Config(format!(
                "head_dim {} must be even (rotary embedding pairs dimensions)",
                self.head_dim()
            )));
        }
        if !self.rope_theta_base.is_finite() || self.rope_theta_base <= 0.0 {
            return Err(Error::Config("rope_theta_base must be positive".into()));
        }
        if !self.norm_eps.is_finite() || self.norm_eps < 0.0 {
            return Err(Error::Config("norm_eps must be non-negative".into()));
        }
        Ok(())
    }
}

/// One expert: a two-layer gated network with the gated activation on
/// both layers and no biases.
#[derive(Debug, Clone)]
pub struct ExpertParams {
    pub w_g1: Value,
    pub w_u1: Value,
    pub w_g2: Value,
    pub w_d2: Value,
}

/// Learnable parameters of one transformer block.
#[derive(Debug, Clone)]
pub struct BlockParams {
    pub qkv_weight: Value,
    pub qkv_bias: Value,
    pub out_proj: Value,
    /// Slot parameter matrix: one d-dimensional column per slot.
    pub phi: Value,
    pub experts: Vec<ExpertParams>,
    pub norm_attn_gain: Value,
    pub norm_ffn_gain: Value,
}

/// Full language-model parameter set.
#[derive(Debug, Clone)]
pub struct LMParams {
    pub config: ModelConfig,
    pub embedding: Value,
    pub blocks: Vec<BlockParams>,
    pub final_norm_gain: Value,
    /// Output head; `None` when embeddings are tied (the head is then the
    /// embedding transposed).
    pub head: Option<Value>,
}

/// Weight std for normal initialization; biases start at zero and norm
/// gains at one.
pub const INIT_STD: f64 = 0.02;

/// Every parameter the architecture declares, in canonical order, as
/// (name, shape). This enumeration is the single source of truth for both
/// allocation and serialization order.
pub fn parameter_shapes(cfg: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let d = cfg.hidden_size;
    let i = cfg.intermediate_size;
    let mut shapes = vec![("embedding".to_string(), vec![cfg.vocab_size, d])];
    for b in 0..cfg.layers {
        shapes.push((format!("blocks.{b}.qkv_weight"), vec![d, 3 * d]));
        shapes.push((format!("blocks.{b}.qkv_bias"), vec![3 * d]));
        shapes.push((format!("blocks.{b}.out_proj"), vec![d, d]));
        shapes.push((format!("blocks.{b}.phi"), vec![d, cfg.slots()]));
        for e in 0..cfg.num_experts {
            shapes.push((format!("blocks.{b}.experts.{e}.w_g1"), vec![d, i]));
            shapes.push((format!("blocks.{b}.experts.{e}.w_u1"), vec![d, i]));
            shapes.push((format!("blocks.{b}.experts.{e}.w_g2"), vec![i, d]));
            shapes.push((format!("blocks.{b}.experts.{e}.w_d2"), vec![i, d]));
        }
        shapes.push((format!("blocks.{b}.norm_attn_gain"), vec![d]));
        shapes.push((format!("blocks.{b}.norm_ffn_gain"), vec![d]));
    }
    shapes.push(("final_norm_gain".to_string(), vec![d]));
    if !cfg.tie_embeddings {
        shapes.push(("head".to_string(), vec![d, cfg.vocab_size]));
    }
    shapes
}

/// Closed-form parameter count (independent of [`parameter_shapes`]:
/// tests hold the two routes against each other).
pub fn count_parameters(cfg: &ModelConfig) -> u64 {
    let d = cfg.hidden_size as u64;
    let i = cfg.intermediate_size as u64;
    let v = cfg.vocab_size as u64;
    let slots = cfg.slots() as u64;
    let n = cfg.num_experts as u64;
    let per_block = d * 3 * d + 3 * d        // qkv projection + its bias
        + d * d                              // output projection
        + d * slots                          // slot matrix
        + n * 4 * d * i                      // four gated-network matrices per expert
        + 2 * d;                             // two norm gains
    let mut total = v * d                    // embedding
        + cfg.layers as u64 * per_block
        + d;                                 // final norm gain
    if !cfg.tie_embeddings {
        total += d * v; // untied output head
    }
    total
}

impl LMParams {
    /// Deterministic seeded initialization: matrices normal(0, 0.02),
    /// biases zero, norm gains one. The same (config, seed) always
    /// produces bitwise-identical parameters.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut master = SplitMix64::new(seed);
        let mut draw = |shape: &[usize], scheme: InitScheme| {
            let s = master.next_u64();
            Value::seeded_init(shape, scheme, s).requires_grad()
        };
        let normal = InitScheme::Normal { std: INIT_STD };
        let d = cfg.hidden_size;
        let i = cfg.intermediate_size;

        let embedding = draw(&[cfg.vocab_size, d], normal);
        let mut blocks = Vec::with_capacity(cfg.layers);
        for _ in 0..cfg.layers {
            let qkv_weight = draw(&[d, 3 * d], normal);
            let qkv_bias = draw(&[3 * d], InitScheme::Zeros);
            let out_proj = draw(&[d, d], normal);
            let phi = draw(&[d, cfg.slots()], normal);
            let experts = (0..cfg.num_experts)
                .map(|_| ExpertParams {
                    w_g1: draw(&[d, i], normal),
                    w_u1: draw(&[d, i], normal),
                    w_g2: draw(&[i, d], normal),
                    w_d2: draw(&[i, d], normal),
                })
                .collect();
            blocks.push(BlockParams {
                qkv_weight,
                qkv_bias,
                out_proj,
                phi,
                experts,
                norm_attn_gain: draw(&[d], InitScheme::Ones),
                norm_ffn_gain: draw(&[d], InitScheme::Ones),
            });
        }
        let final_norm_gain = draw(&[d], InitScheme::Ones);
        let head = if cfg.tie_embeddings {
            None
        } else {
            Some(draw(&[d, cfg.vocab_size], normal))
        };
        let params = Self {
            config: cfg.clone(),
            embedding,
            blocks,
            final_norm_gain,
            head,
        };
        debug_assert_eq!(
            params
                .params()
                .iter()
                .map(|(n, v)| (n.clone(), v.shape().to_vec()))
                .collect::<Vec<_>>(),
            parameter_shapes(cfg),
        );
        Ok(params)
    }

    /// All parameters in canonical order. Serialization, the optimizer,
    /// and gradient clipping iterate this order — never a hash map.
    pub fn params(&self) -> Vec<(String, Value)> {
        let mut out = vec![("embedding".to_string(), self.embedding.clone())];
        for (b, block) in self.blocks.iter().enumerate() {
            out.push((format!("blocks.{b}.qkv_weight"), block.qkv_weight.clone()));
            out.push((format!("blocks.{b}.qkv_bias"), block.qkv_bias.clone()));
            out.push((format!("blocks.{b}.out_proj"), block.out_proj.clone()));
            out.push((format!("blocks.{b}.phi"), block.phi.clone()));
            for (e, ex) in block.experts.iter().enumerate() {
                out.push((format!("blocks.{b}.experts.{e}.w_g1"), ex.w_g1.clone()));
                out.push((format!("blocks.{b}.experts.{e}.w_u1"), ex.w_u1.clone()));
                out.push((format!("blocks.{b}.experts.{e}.w_g2"), ex.w_g2.clone()));
                out.push((format!("blocks.{b}.experts.{e}.w_d2"), ex.w_d2.clone()));
            }
            out.push((format!("blocks.{b}.norm_attn_gain"), block.norm_attn_gain.clone()));
            out.push((format!("blocks.{b}.norm_ffn_gain"), block.norm_ffn_gain.clone()));
        }
        out.push(("final_norm_gain".to_string(), self.final_norm_gain.clone()));
        if let Some(head) = &self.head {
            out.push(("head".to_string(), head.clone()));
        }
        out
    }

    pub fn zero_grad(&self) {
        for (_, p) in self.params() {
            p.zero_grad();
        }
    }
}
