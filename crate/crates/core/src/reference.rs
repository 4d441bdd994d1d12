//! Plain-loop reference implementations used to cross-check the
//! graph-based operations.
//!
//! Everything here is written as straight-line f64 arithmetic with no
//! shared code with [`crate::tensor`] or [`crate::model`], so agreement
//! between the two routes is meaningful evidence of correctness rather
//! than a tautology.

/// Raw weight matrices of one expert, row-major.
pub struct RawExpert {
    /// `[d × intermediate]` first-layer gate.
    pub w_g1: Vec<f64>,
    /// `[d × intermediate]` first-layer up projection.
    pub w_u1: Vec<f64>,
    /// `[intermediate × d]` second-layer gate.
    pub w_g2: Vec<f64>,
    /// `[intermediate × d]` second-layer down projection.
    pub w_d2: Vec<f64>,
}

fn silu(x: f64) -> f64 {
    x / (1.0 + (-x).exp())
}

fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for kk in 0..k {
            let av = a[i * k + kk];
            for j in 0..n {
                out[i * n + j] += av * b[kk * n + j];
            }
        }
    }
    out
}

/// Double-gated feed-forward network evaluated with explicit loops.
pub fn enhanced_ffn_reference(
    x: &[f64],
    rows: usize,
    d: usize,
    inter: usize,
    expert: &RawExpert,
) -> Vec<f64> {
    let g = matmul(x, &expert.w_g1, rows, d, inter);
    let u = matmul(x, &expert.w_u1, rows, d, inter);
    let h: Vec<f64> = g.iter().zip(&u).map(|(a, b)| silu(*a) * b).collect();
    let g2 = matmul(&h, &expert.w_g2, rows, inter, d);
    let d2 = matmul(&h, &expert.w_d2, rows, inter, d);
    g2.iter().zip(&d2).map(|(a, b)| silu(*a) * b).collect()
}

/// Result of [`soft_moe_reference`]: the layer output plus the column
/// sums of the dispatch weights and row sums of the combine weights
/// (each should be 1 for a correct softmax).
pub struct SoftMoeReference {
    /// `[m × d]` layer output.
    pub y: Vec<f64>,
    /// One sum per slot column of the dispatch weights.
    pub dispatch_col_sums: Vec<f64>,
    /// One sum per token row of the combine weights.
    pub combine_row_sums: Vec<f64>,
}

/// The mixture layer re-evaluated from its three defining formulas:
/// logits `L = X·Φ`, slots `X̃ = softmax_cols(L)ᵀ·X` fed to expert
/// `⌊slot/p⌋`, output `Y = softmax_rows(L)·Ỹ`.
#[allow(clippy::too_many_arguments)]
pub fn soft_moe_reference(
    x: &[f64],
    m: usize,
    d: usize,
    phi: &[f64],
    slots: usize,
    slots_per_expert: usize,
    intermediate: usize,
    experts: &[RawExpert],
) -> SoftMoeReference {
    assert_eq!(slots % slots_per_expert, 0);
    assert_eq!(experts.len(), slots / slots_per_expert);
    let logits = matmul(x, phi, m, d, slots);

    // Column-wise softmax -> dispatch weights.
    let mut dispatch = vec![0.0; m * slots];
    for s in 0..slots {
        let mut max = f64::NEG_INFINITY;
        for i in 0..m {
            max = max.max(logits[i * slots + s]);
        }
        let mut sum = 0.0;
        for i in 0..m {
            let e = (logits[i * slots + s] - max).exp();
            dispatch[i * slots + s] = e;
            sum += e;
        }
        for i in 0..m {
            dispatch[i * slots + s] /= sum;
        }
    }

    // Slots: X̃[s] = Σ_i D[i,s]·X[i].
    let mut xtilde = vec![0.0; slots * d];
    for s in 0..slots {
        for i in 0..m {
            let w = dispatch[i * slots + s];
            for j in 0..d {
                xtilde[s * d + j] += w * x[i * d + j];
            }
        }
    }

    // Expert application per slot.
    let mut ytilde = vec![0.0; slots * d];
    for s in 0..slots {
        let out = enhanced_ffn_reference(
            &xtilde[s * d..(s + 1) * d],
            1,
            d,
            intermediate,
            &experts[s / slots_per_expert],
        );
        ytilde[s * d..(s + 1) * d].copy_from_slice(&out);
    }

    // Row-wise softmax -> combine weights.
    let mut combine = vec![0.0; m * slots];
    for i in 0..m {
        let row = &logits[i * slots..(i + 1) * slots];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for s in 0..slots {
            let e = (row[s] - max).exp();
            combine[i * slots + s] = e;
            sum += e;
        }
        for s in 0..slots {
            combine[i * slots + s] /= sum;
        }
    }

    // Y = C·Ỹ.
    let y = matmul(&combine, &ytilde, m, slots, d);

    let dispatch_col_sums = (0..slots)
        .map(|s| (0..m).map(|i| dispatch[i * slots + s]).sum())
        .collect();
    let combine_row_sums = (0..m)
        .map(|i| (0..slots).map(|s| combine[i * slots + s]).sum())
        .collect();
    SoftMoeReference {
        y,
        dispatch_col_sums,
        combine_row_sums,
    }
}
