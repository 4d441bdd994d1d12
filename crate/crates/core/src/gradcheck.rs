//! Aggregated finite-difference verification: every differentiable
//! component, from primitive tensor operations up to the full
//! language-model loss, is checked against the central-difference oracle
//! and reported with its worst relative error.

use crate::error::{Error, Result};
use crate::model::{
    causal_attention, embedding, enhanced_ffn, lm_forward, rms_norm, rope_apply, soft_moe_layer,
    transformer_block, ExpertParams, LMParams, ModelConfig,
};
use crate::tensor::{finite_difference_gradient, max_rel_err, InitScheme, Value};
use crate::train::cross_entropy_shifted;

/// Step size for the central-difference probe; in double precision this
/// keeps truncation and rounding error both far below the tolerances the
/// suite is judged against.
const EPS: f64 = 1e-5;

/// Outcome for one named component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentCheck {
    pub name: &'static str,
    /// Worst relative error across every checked input and parameter,
    /// with a unit floor in the denominator.
    pub worst_rel_err: f64,
}

impl ComponentCheck {
    /// Whether the component's worst error clears the tolerance.
    pub fn passes(&self, tolerance: f64) -> bool {
        self.worst_rel_err.is_finite() && self.worst_rel_err <= tolerance
    }
}

/// The whole suite's outcome against one tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub components: Vec<ComponentCheck>,
}

impl GradCheckReport {
    pub fn all_pass(&self) -> bool {
        self.components.iter().all(|c| c.passes(self.tolerance))
    }

    /// Names of the components exceeding the tolerance.
    pub fn failures(&self) -> Vec<&'static str> {
        self.components
            .iter()
            .filter(|c| !c.passes(self.tolerance))
            .map(|c| c.name)
            .collect()
    }
}

/// One checkable unit: a scalar-valued forward pass plus the leaves whose
/// gradients it must get right.
struct Component {
    name: &'static str,
    params: Vec<Value>,
    forward: Box<dyn Fn() -> Result<Value>>,
}

fn init(shape: &[usize], seed: u64) -> Value {
    Value::seeded_init(shape, InitScheme::Normal { std: 0.8 }, seed)
}

fn param(shape: &[usize], seed: u64) -> Value {
    init(shape, seed).requires_grad()
}

/// Scalar loss that weights every output coordinate differently, so that
/// gradients of structurally-constrained outputs (softmax rows summing to
/// one, rotations preserving norms) cannot vanish and hide a wrong rule.
fn weighted_sum(out: &Value, weights: &Value) -> Result<Value> {
    Ok(out.mul(weights)?.sum())
}

fn components(cfg: &ModelConfig) -> Result<Vec<Component>> {
    let mut comps = Vec::new();

    {
        let a = param(&[3, 4], 101);
        let b = param(&[4, 2], 102);
        let r = init(&[3, 2], 103);
        let (fa, fb, fr) = (a.clone(), b.clone(), r.clone());
        comps.push(Component {
            name: "matmul",
            params: vec![a, b],
            forward: Box::new(move || weighted_sum(&fa.matmul(&fb)?, &fr)),
        });
    }
    {
        let x = param(&[3, 4], 111);
        let bias = param(&[4], 112);
        let r = init(&[3, 4], 113);
        let (fx, fb, fr) = (x.clone(), bias.clone(), r.clone());
        comps.push(Component {
            name: "add_row",
            params: vec![x, bias],
            forward: Box::new(move || weighted_sum(&fx.add_row(&fb)?, &fr)),
        });
    }
    {
        let a = param(&[2, 5], 121);
        let b = param(&[2, 5], 122);
        let r = init(&[2, 5], 123);
        let (fa, fb, fr) = (a.clone(), b.clone(), r.clone());
        comps.push(Component {
            name: "mul",
            params: vec![a, b],
            forward: Box::new(move || weighted_sum(&fa.mul(&fb)?, &fr)),
        });
    }
    {
        // Fixed probe points around the gate's curvature plus random tails.
        let mut data = vec![-2.0, -0.5, 0.0, 0.5, 2.0];
        data.extend(init(&[5], 131).to_vec());
        let x = Value::new(&[10], data, true)?;
        let r = init(&[10], 132);
        let (fx, fr) = (x.clone(), r.clone());
        comps.push(Component {
            name: "silu",
            params: vec![x],
            forward: Box::new(move || weighted_sum(&fx.silu(), &fr)),
        });
    }
    {
        let x = param(&[3, 5], 141);
        let r = init(&[3, 5], 142);
        let (fx, fr) = (x.clone(), r.clone());
        comps.push(Component {
            name: "softmax",
            params: vec![x],
            forward: Box::new(move || weighted_sum(&fx.softmax(1)?, &fr)),
        });
    }
    {
        let x = param(&[3, 6], 151);
        let gain = param(&[6], 152);
        let r = init(&[3, 6], 153);
        let (fx, fg, fr) = (x.clone(), gain.clone(), r.clone());
        comps.push(Component {
            name: "rms_norm",
            params: vec![x, gain],
            forward: Box::new(move || weighted_sum(&rms_norm(&fx, &fg, 1e-6)?, &fr)),
        });
    }
    {
        let x = param(&[4, 8], 161);
        let r = init(&[4, 8], 162);
        let (fx, fr) = (x.clone(), r.clone());
        comps.push(Component {
            name: "rope_apply",
            params: vec![x],
            forward: Box::new(move || {
                weighted_sum(&rope_apply(&fx, 2, &[0, 1, 2, 3], 10_000.0)?, &fr)
            }),
        });
    }
    {
        let table = param(&[7, 6], 171);
        let r = init(&[4, 6], 172);
        let ids = [0u32, 3, 1, 3];
        let (ft, fr) = (table.clone(), r.clone());
        comps.push(Component {
            name: "embedding",
            params: vec![table],
            forward: Box::new(move || weighted_sum(&embedding(&ids, &ft)?, &fr)),
        });
    }
    {
        let x = param(&[3, 4], 181);
        let expert = ExpertParams {
            w_g1: param(&[4, 4], 182),
            w_u1: param(&[4, 4], 183),
            w_g2: param(&[4, 4], 184),
            w_d2: param(&[4, 4], 185),
        };
        let r = init(&[3, 4], 186);
        let params = vec![
            x.clone(),
            expert.w_g1.clone(),
            expert.w_u1.clone(),
            expert.w_g2.clone(),
            expert.w_d2.clone(),
        ];
        let fx = x.clone();
        let fr = r.clone();
        comps.push(Component {
            name: "enhanced_ffn",
            params,
            forward: Box::new(move || weighted_sum(&enhanced_ffn(&fx, &expert)?, &fr)),
        });
    }

    // Model-level components share one seeded parameter set at the
    // configured sizes.
    let lm = LMParams::init(cfg, 2024)?;
    let d = cfg.hidden_size;
    let seq = cfg.max_seq_len.min(4);
    let positions: Vec<usize> = (0..seq).collect();

    {
        let x = param(&[seq, d], 191);
        let r = init(&[seq, d], 192);
        let block = lm.blocks[0].clone();
        let mut params = vec![x.clone(), block.phi.clone()];
        for e in &block.experts {
            params.extend([
                e.w_g1.clone(),
                e.w_u1.clone(),
                e.w_g2.clone(),
                e.w_d2.clone(),
            ]);
        }
        let fx = x.clone();
        let fr = r.clone();
        let spe = cfg.slots_per_expert;
        comps.push(Component {
            name: "soft_moe_layer",
            params,
            forward: Box::new(move || weighted_sum(&soft_moe_layer(&fx, &block, spe)?, &fr)),
        });
    }
    {
        let x = param(&[seq, d], 201);
        let r = init(&[seq, d], 202);
        let block = lm.blocks[0].clone();
        let params = vec![
            x.clone(),
            block.qkv_weight.clone(),
            block.qkv_bias.clone(),
            block.out_proj.clone(),
        ];
        let fx = x.clone();
        let fr = r.clone();
        let fcfg = cfg.clone();
        let fpos = positions.clone();
        comps.push(Component {
            name: "causal_attention",
            params,
            forward: Box::new(move || {
                weighted_sum(&causal_attention(&fx, &block, &fpos, &fcfg)?, &fr)
            }),
        });
    }
    {
        let x = param(&[seq, d], 211);
        let r = init(&[seq, d], 212);
        let block = lm.blocks[0].clone();
        let mut params = vec![
            x.clone(),
            block.qkv_weight.clone(),
            block.qkv_bias.clone(),
            block.out_proj.clone(),
            block.phi.clone(),
            block.norm_attn_gain.clone(),
            block.norm_ffn_gain.clone(),
        ];
        for e in &block.experts {
            params.extend([
                e.w_g1.clone(),
                e.w_u1.clone(),
                e.w_g2.clone(),
                e.w_d2.clone(),
            ]);
        }
        let fx = x.clone();
        let fr = r.clone();
        let fcfg = cfg.clone();
        let fpos = positions.clone();
        comps.push(Component {
            name: "transformer_block",
            params,
            forward: Box::new(move || {
                weighted_sum(&transformer_block(&fx, &block, &fpos, &fcfg)?, &fr)
            }),
        });
    }
    {
        let len = cfg.max_seq_len.min(6);
        let tokens: Vec<u32> = (0..len as u32)
            .map(|t| (t * 5 + 1) % cfg.vocab_size as u32)
            .collect();
        let params: Vec<Value> = lm.params().into_iter().map(|(_, v)| v).collect();
        comps.push(Component {
            name: "lm_loss",
            params,
            forward: Box::new(move || cross_entropy_shifted(&lm_forward(&tokens, &lm)?, &tokens)),
        });
    }

    Ok(comps)
}

/// Runs the full suite at the configured model sizes. `sabotage` injects a
/// deliberate error into the named component's analytic gradient before
/// comparison, proving the oracle actually detects broken backward rules.
pub fn run_gradcheck(
    cfg: &ModelConfig,
    tolerance: f64,
    sabotage: Option<&str>,
) -> Result<GradCheckReport> {
    if !tolerance.is_finite() || tolerance <= 0.0 {
        return Err(Error::Config(format!(
            "tolerance must be a positive finite number, got {tolerance}"
        )));
    }
    let comps = components(cfg)?;
    if let Some(target) = sabotage {
        if !comps.iter().any(|c| c.name == target) {
            return Err(Error::Config(format!(
                "unknown component {target:?}; expected one of: {}",
                comps
                    .iter()
                    .map(|c| c.name)
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
    }

    let mut results = Vec::with_capacity(comps.len());
    for comp in &comps {
        for p in &comp.params {
            p.zero_grad();
        }
        let loss = (comp.forward)()?;
        loss.backward()?;
        let mut analytic: Vec<Vec<f64>> = comp
            .params
            .iter()
            .map(|p| p.grad().expect("parameter gradient after backward"))
            .collect();
        if sabotage == Some(comp.name) {
            let g = &mut analytic[0][0];
            *g += 1.0 + g.abs();
        }

        let mut worst = 0.0f64;
        for (p, grads) in comp.params.iter().zip(&analytic) {
            let original = p.to_vec();
            let numeric = finite_difference_gradient(
                &mut |data| {
                    p.set_data(data);
                    (comp.forward)()
                        .expect("forward succeeded once; shapes cannot change")
                        .item()
                },
                &original,
                EPS,
            );
            p.set_data(&original);
            worst = worst.max(max_rel_err(grads, &numeric));
        }
        results.push(ComponentCheck {
            name: comp.name,
            worst_rel_err: worst,
        });
    }
    Ok(GradCheckReport {
        tolerance,
        components: results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_config_passes_the_whole_suite() {
        let report = run_gradcheck(&ModelConfig::tiny(), 1e-4, None).unwrap();
        assert_eq!(report.components.len(), 13);
        assert!(
            report.all_pass(),
            "failures: {:?} ({:?})",
            report.failures(),
            report.components
        );
        // The errors should in fact sit far below the gate, not hug it.
        for c in &report.components {
            assert!(c.worst_rel_err < 1e-6, "{}: {}", c.name, c.worst_rel_err);
        }
    }

    #[test]
    fn sabotaged_gradients_are_caught_and_named() {
        for target in ["matmul", "lm_loss"] {
            let report = run_gradcheck(&ModelConfig::tiny(), 1e-4, Some(target)).unwrap();
            assert!(!report.all_pass());
            assert_eq!(report.failures(), vec![target]);
        }
    }

    #[test]
    fn unknown_sabotage_target_is_a_config_error() {
        let err = run_gradcheck(&ModelConfig::tiny(), 1e-4, Some("nonsense")).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn unattainable_tolerance_fails_and_invalid_tolerance_errors() {
        let report = run_gradcheck(&ModelConfig::tiny(), 1e-30, None).unwrap();
        assert!(!report.all_pass());
        assert!(run_gradcheck(&ModelConfig::tiny(), 0.0, None).is_err());
        assert!(run_gradcheck(&ModelConfig::tiny(), f64::NAN, None).is_err());
    }
}
