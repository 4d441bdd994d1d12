//! Dense f64 arrays with reverse-mode automatic differentiation.
//!
//! A [`Value`] is an immutable node in a directed acyclic graph: leaves are
//! created directly, interior nodes record their parents and a backward
//! rule. [`Value::backward`] walks the graph once in reverse topological
//! order, computes d(loss)/d(node) for every node in a per-call scratch
//! map, and then adds the result into the persistent `grad` buffer of each
//! node that requires gradients — so repeated backward calls accumulate
//! exactly (two calls double the gradient).
//!
//! All arithmetic is in 64-bit floats; every forward op asserts (in debug
//! builds) that it produced no NaN/Inf from finite inputs.

use std::cell::{Ref, RefCell};
use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

type BackwardFn = Box<dyn Fn(&[f64], &mut Scratch)>;

struct Node {
    id: u64,
    shape: Vec<usize>,
    data: RefCell<Vec<f64>>,
    grad: RefCell<Option<Vec<f64>>>,
    /// Caller asked for gradients on this node.
    requires_grad: bool,
    /// This node or one of its ancestors requires gradients.
    needs_grad: bool,
    parents: Vec<Value>,
    backward: Option<BackwardFn>,
}

/// Per-backward-call gradient buffers, keyed by node id.
pub(crate) struct Scratch {
    map: HashMap<u64, Vec<f64>>,
}

impl Scratch {
    /// Adds a contribution to `v`'s scratch gradient via `add`, which
    /// receives the (zero-initialized on first touch) buffer.
    pub(crate) fn accumulate(&mut self, v: &Value, add: impl FnOnce(&mut [f64])) {
        if !v.0.needs_grad {
            return;
        }
        let buf = self
            .map
            .entry(v.0.id)
            .or_insert_with(|| vec![0.0; v.len()]);
        add(buf);
    }
}

/// Dense multi-dimensional f64 array; optionally tracks gradients.
#[derive(Clone)]
pub struct Value(Rc<Node>);

/// Weight-initialization schemes for [`Value::seeded_init`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum InitScheme {
    Normal { std: f64 },
    Zeros,
    Ones,
}

fn debug_assert_finite(op: &'static str, data: &[f64]) {
    debug_assert!(
        data.iter().all(|v| v.is_finite()),
        "non-finite value produced by {op}"
    );
}

impl Value {
    // ---------------------------------------------------------------- leaves

    pub fn new(shape: &[usize], data: Vec<f64>, requires_grad: bool) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Contract(format!(
                "zero extent in shape {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Contract(format!(
                "shape {shape:?} implies {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Self(Rc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            shape: shape.to_vec(),
            data: RefCell::new(data),
            grad: RefCell::new(None),
            requires_grad,
            needs_grad: requires_grad,
            parents: Vec::new(),
            backward: None,
        })))
    }

    pub fn scalar(x: f64) -> Self {
        Self::new(&[1], vec![x], false).expect("scalar")
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self::new(shape, vec![0.0; n], false).expect("zeros")
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        Self::new(shape, data, false)
    }

    /// Deterministic seeded initialization: the same (shape, scheme, seed)
    /// always yields a bitwise-identical buffer.
    pub fn seeded_init(shape: &[usize], scheme: InitScheme, seed: u64) -> Self {
        let n: usize = shape.iter().product();
        let data = match scheme {
            InitScheme::Zeros => vec![0.0; n],
            InitScheme::Ones => vec![1.0; n],
            InitScheme::Normal { std } => {
                let mut rng = SplitMix64::new(seed);
                let mut out = Vec::with_capacity(n);
                while out.len() < n {
                    let (a, b) = rng.next_normal_pair();
                    out.push(a * std);
                    if out.len() < n {
                        out.push(b * std);
                    }
                }
                out
            }
        };
        Self::new(shape, data, false).expect("seeded_init")
    }

    /// Marks this leaf as a parameter that receives gradients.
    pub fn requires_grad(self) -> Self {
        assert!(
            self.0.parents.is_empty(),
            "requires_grad must be set on leaves"
        );
        Self(Rc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            shape: self.0.shape.clone(),
            data: RefCell::new(self.0.data.borrow().clone()),
            grad: RefCell::new(None),
            requires_grad: true,
            needs_grad: true,
            parents: Vec::new(),
            backward: None,
        }))
    }

    /// Interior-node constructor used by all ops (including fused ops in
    /// other modules of this crate).
    pub(crate) fn from_op(
        op: &'static str,
        shape: Vec<usize>,
        data: Vec<f64>,
        parents: Vec<Value>,
        backward: BackwardFn,
    ) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        debug_assert_finite(op, &data);
        let needs_grad = parents.iter().any(|p| p.0.needs_grad);
        Self(Rc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            shape,
            data: RefCell::new(data),
            grad: RefCell::new(None),
            requires_grad: false,
            needs_grad,
            parents,
            backward: if needs_grad { Some(backward) } else { None },
        }))
    }

    // ------------------------------------------------------------- accessors

    pub fn shape(&self) -> &[usize] {
        &self.0.shape
    }

    pub fn len(&self) -> usize {
        self.0.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false // zero extents are rejected at construction
    }

    pub fn data(&self) -> Ref<'_, Vec<f64>> {
        self.0.data.borrow()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.data.borrow().clone()
    }

    /// The single element of a scalar.
    pub fn item(&self) -> f64 {
        assert_eq!(self.len(), 1, "item() on non-scalar {:?}", self.shape());
        self.0.data.borrow()[0]
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.0.grad.borrow().clone()
    }

    pub fn zero_grad(&self) {
        *self.0.grad.borrow_mut() = None;
    }

    pub fn is_parameter(&self) -> bool {
        self.0.requires_grad
    }

    /// Replaces the data buffer in place (optimizer updates). Only valid
    /// between graph constructions: graphs built afterwards see new data.
    pub fn set_data(&self, new: &[f64]) {
        let mut data = self.0.data.borrow_mut();
        assert_eq!(data.len(), new.len(), "set_data length mismatch");
        data.copy_from_slice(new);
    }

    /// Mutates the data buffer in place via a closure.
    pub fn update_data(&self, f: impl FnOnce(&mut [f64])) {
        f(&mut self.0.data.borrow_mut());
    }

    /// Adds directly into the persistent gradient buffer (used by fused
    /// training steps and tests).
    pub fn accumulate_grad(&self, delta: &[f64]) {
        let mut grad = self.0.grad.borrow_mut();
        let buf = grad.get_or_insert_with(|| vec![0.0; self.len()]);
        for (g, d) in buf.iter_mut().zip(delta) {
            *g += d;
        }
    }

    /// Multiply the stored gradient, if any, by `c` in place.
    pub fn scale_grad(&self, c: f64) {
        if let Some(g) = self.0.grad.borrow_mut().as_mut() {
            for x in g.iter_mut() {
                *x *= c;
            }
        }
    }

    // -------------------------------------------------------------- backward

    /// Reverse-mode sweep from a scalar loss. Gradients of every
    /// `requires_grad` node are accumulated (+=) into their persistent
    /// buffers; each graph node's rule runs exactly once per call.
    pub fn backward(&self) -> Result<()> {
        if self.len() != 1 {
            return Err(Error::Contract(format!(
                "backward requires a scalar loss, got shape {:?}",
                self.shape()
            )));
        }
        // Iterative post-order DFS for the topological order.
        let mut order: Vec<Value> = Vec::new();
        let mut visited: HashMap<u64, ()> = HashMap::new();
        let mut stack: Vec<(Value, usize)> = vec![(self.clone(), 0)];
        visited.insert(self.0.id, ());
        while let Some((node, child)) = stack.pop() {
            if child < node.0.parents.len() {
                let parent = node.0.parents[child].clone();
                stack.push((node, child + 1));
                if parent.0.needs_grad && !visited.contains_key(&parent.0.id) {
                    visited.insert(parent.0.id, ());
                    stack.push((parent, 0));
                }
            } else {
                order.push(node);
            }
        }
        // `order` is post-order: parents precede children, so iterate in
        // reverse to visit each node before its parents.
        let mut scratch = Scratch {
            map: HashMap::new(),
        };
        scratch.map.insert(self.0.id, vec![1.0]);
        for node in order.iter().rev() {
            let out_grad = match scratch.map.remove(&node.0.id) {
                Some(g) => g,
                None => continue, // no gradient path reached this node
            };
            if let Some(rule) = &node.0.backward {
                rule(&out_grad, &mut scratch);
            }
            if node.0.requires_grad {
                node.accumulate_grad(&out_grad);
            }
        }
        Ok(())
    }

    // ------------------------------------------------------------------- ops

    fn require_2d(&self, op: &'static str) -> Result<(usize, usize)> {
        match self.shape() {
            [r, c] => Ok((*r, *c)),
            other => Err(Error::Shape {
                op,
                lhs: other.to_vec(),
                rhs: vec![],
            }),
        }
    }

    /// Matrix product [m×k]·[k×n] → [m×n].
    pub fn matmul(&self, rhs: &Value) -> Result<Value> {
        let (m, k) = self.require_2d("matmul")?;
        let (k2, n) = rhs.require_2d("matmul")?;
        if k != k2 {
            return Err(Error::Shape {
                op: "matmul",
                lhs: self.shape().to_vec(),
                rhs: rhs.shape().to_vec(),
            });
        }
        let a = self.data();
        let b = rhs.data();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let arow = &a[i * k..(i + 1) * k];
            let orow = &mut out[i * n..(i + 1) * n];
            for (kk, &aik) in arow.iter().enumerate() {
                let brow = &b[kk * n..(kk + 1) * n];
                for (o, &bkj) in orow.iter_mut().zip(brow) {
                    *o += aik * bkj;
                }
            }
        }
        drop(a);
        drop(b);
        let lhs = self.clone();
        let rhsc = rhs.clone();
        Ok(Value::from_op(
            "matmul",
            vec![m, n],
            out,
            vec![self.clone(), rhs.clone()],
            Box::new(move |dc, scratch| {
                let a = lhs.data();
                let b = rhsc.data();
                // dA[i,kk] += Σ_j dC[i,j]·B[kk,j]
                scratch.accumulate(&lhs, |da| {
                    for i in 0..m {
                        let dcrow = &dc[i * n..(i + 1) * n];
                        let darow = &mut da[i * k..(i + 1) * k];
                        for (kk, dav) in darow.iter_mut().enumerate() {
                            let brow = &b[kk * n..(kk + 1) * n];
                            let mut acc = 0.0;
                            for (dcv, bv) in dcrow.iter().zip(brow) {
                                acc += dcv * bv;
                            }
                            *dav += acc;
                        }
                    }
                });
                // dB[kk,j] += Σ_i A[i,kk]·dC[i,j]
                scratch.accumulate(&rhsc, |db| {
                    for i in 0..m {
                        let arow = &a[i * k..(i + 1) * k];
                        let dcrow = &dc[i * n..(i + 1) * n];
                        for (kk, &aik) in arow.iter().enumerate() {
                            if aik == 0.0 {
                                continue;
                            }
                            let dbrow = &mut db[kk * n..(kk + 1) * n];
                            for (dbv, dcv) in dbrow.iter_mut().zip(dcrow) {
                                *dbv += aik * dcv;
                            }
                        }
                    }
                });
            }),
        ))
    }

    /// Elementwise sum of two same-shape values.
    pub fn add(&self, rhs: &Value) -> Result<Value> {
        if self.shape() != rhs.shape() {
            return Err(Error::Shape {
                op: "add",
                lhs: self.shape().to_vec(),
                rhs: rhs.shape().to_vec(),
            });
        }
        let out: Vec<f64> = self
            .data()
            .iter()
            .zip(rhs.data().iter())
            .map(|(a, b)| a + b)
            .collect();
        let (l, r) = (self.clone(), rhs.clone());
        Ok(Value::from_op(
            "add",
            self.shape().to_vec(),
            out,
            vec![self.clone(), rhs.clone()],
            Box::new(move |dc, scratch| {
                scratch.accumulate(&l, |da| {
                    for (a, d) in da.iter_mut().zip(dc) {
                        *a += d;
                    }
                });
                scratch.accumulate(&r, |db| {
                    for (b, d) in db.iter_mut().zip(dc) {
                        *b += d;
                    }
                });
            }),
        ))
    }

    /// Adds a length-n bias row to every row of an [m×n] matrix.
    pub fn add_row(&self, bias: &Value) -> Result<Value> {
        let (m, n) = self.require_2d("add_row")?;
        if bias.shape() != [n] {
            return Err(Error::Shape {
                op: "add_row",
                lhs: self.shape().to_vec(),
                rhs: bias.shape().to_vec(),
            });
        }
        let b = bias.data();
        let out: Vec<f64> = self
            .data()
            .iter()
            .enumerate()
            .map(|(idx, a)| a + b[idx % n])
            .collect();
        drop(b);
        let (l, r) = (self.clone(), bias.clone());
        Ok(Value::from_op(
            "add_row",
            vec![m, n],
            out,
            vec![self.clone(), bias.clone()],
            Box::new(move |dc, scratch| {
                scratch.accumulate(&l, |da| {
                    for (a, d) in da.iter_mut().zip(dc) {
                        *a += d;
                    }
                });
                scratch.accumulate(&r, |db| {
                    for (idx, d) in dc.iter().enumerate() {
                        db[idx % n] += d;
                    }
                });
            }),
        ))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&self, rhs: &Value) -> Result<Value> {
        if self.shape() != rhs.shape() {
            return Err(Error::Shape {
                op: "mul",
                lhs: self.shape().to_vec(),
                rhs: rhs.shape().to_vec(),
            });
        }
        let out: Vec<f64> = self
            .data()
            .iter()
            .zip(rhs.data().iter())
            .map(|(a, b)| a * b)
            .collect();
        let (l, r) = (self.clone(), rhs.clone());
        Ok(Value::from_op(
            "mul",
            self.shape().to_vec(),
            out,
            vec![self.clone(), rhs.clone()],
            Box::new(move |dc, scratch| {
                let (ld, rd) = (l.data(), r.data());
                scratch.accumulate(&l, |da| {
                    for ((a, d), b) in da.iter_mut().zip(dc).zip(rd.iter()) {
                        *a += d * b;
                    }
                });
                scratch.accumulate(&r, |db| {
                    for ((b, d), a) in db.iter_mut().zip(dc).zip(ld.iter()) {
                        *b += d * a;
                    }
                });
            }),
        ))
    }

    /// Multiplication by a compile-time constant.
    pub fn scale(&self, c: f64) -> Value {
        let out: Vec<f64> = self.data().iter().map(|a| a * c).collect();
        let l = self.clone();
        Value::from_op(
            "scale",
            self.shape().to_vec(),
            out,
            vec![self.clone()],
            Box::new(move |dc, scratch| {
                scratch.accumulate(&l, |da| {
                    for (a, d) in da.iter_mut().zip(dc) {
                        *a += d * c;
                    }
                });
            }),
        )
    }

    /// Elementwise difference.
    pub fn sub(&self, rhs: &Value) -> Result<Value> {
        self.add(&rhs.scale(-1.0))
    }

    /// Elementwise SiLU: x·σ(x).
    pub fn silu(&self) -> Value {
        let out: Vec<f64> = self.data().iter().map(|&x| x * sigmoid(x)).collect();
        let l = self.clone();
        Value::from_op(
            "silu",
            self.shape().to_vec(),
            out,
            vec![self.clone()],
            Box::new(move |dc, scratch| {
                let x = l.data();
                scratch.accumulate(&l, |da| {
                    for ((a, d), &xv) in da.iter_mut().zip(dc).zip(x.iter()) {
                        let s = sigmoid(xv);
                        *a += d * (s + xv * s * (1.0 - s));
                    }
                });
            }),
        )
    }

    /// Max-subtraction-stabilized softmax over axis 0 (down columns) or
    /// axis 1 (along rows) of a 2-D value.
    pub fn softmax(&self, axis: usize) -> Result<Value> {
        let (m, n) = self.require_2d("softmax")?;
        if axis > 1 {
            return Err(Error::Contract(format!("softmax axis {axis} not in {{0,1}}")));
        }
        let x = self.data();
        let mut out = vec![0.0; m * n];
        let (slices, stride, len) = if axis == 1 { (m, 1, n) } else { (n, n, m) };
        for s in 0..slices {
            let base = if axis == 1 { s * n } else { s };
            let mut max = f64::NEG_INFINITY;
            for i in 0..len {
                max = max.max(x[base + i * stride]);
            }
            let mut sum = 0.0;
            for i in 0..len {
                let e = (x[base + i * stride] - max).exp();
                out[base + i * stride] = e;
                sum += e;
            }
            for i in 0..len {
                out[base + i * stride] /= sum;
            }
        }
        drop(x);
        let l = self.clone();
        let y = out.clone();
        Ok(Value::from_op(
            "softmax",
            vec![m, n],
            out,
            vec![self.clone()],
            Box::new(move |dc, scratch| {
                scratch.accumulate(&l, |da| {
                    for s in 0..slices {
                        let base = if axis == 1 { s * n } else { s };
                        let mut dot = 0.0;
                        for i in 0..len {
                            let idx = base + i * stride;
                            dot += dc[idx] * y[idx];
                        }
                        for i in 0..len {
                            let idx = base + i * stride;
                            da[idx] += y[idx] * (dc[idx] - dot);
                        }
                    }
                });
            }),
        ))
    }

    /// Sum of all entries → scalar.
    pub fn sum(&self) -> Value {
        let total: f64 = self.data().iter().sum();
        let l = self.clone();
        Value::from_op(
            "sum",
            vec![1],
            vec![total],
            vec![self.clone()],
            Box::new(move |dc, scratch| {
                let d = dc[0];
                scratch.accumulate(&l, |da| {
                    for a in da.iter_mut() {
                        *a += d;
                    }
                });
            }),
        )
    }

    /// Matrix transpose.
    pub fn transpose(&self) -> Result<Value> {
        let (m, n) = self.require_2d("transpose")?;
        let x = self.data();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = x[i * n + j];
            }
        }
        drop(x);
        let l = self.clone();
        Ok(Value::from_op(
            "transpose",
            vec![n, m],
            out,
            vec![self.clone()],
            Box::new(move |dc, scratch| {
                scratch.accumulate(&l, |da| {
                    for i in 0..m {
                        for j in 0..n {
                            da[i * n + j] += dc[j * m + i];
                        }
                    }
                });
            }),
        ))
    }

    /// Contiguous column slice of a 2-D value.
    pub fn slice_cols(&self, range: Range<usize>) -> Result<Value> {
        let (m, n) = self.require_2d("slice_cols")?;
        if range.end > n || range.start >= range.end {
            return Err(Error::Contract(format!(
                "slice_cols {range:?} out of bounds for {n} columns"
            )));
        }
        let w = range.end - range.start;
        let x = self.data();
        let mut out = Vec::with_capacity(m * w);
        for i in 0..m {
            out.extend_from_slice(&x[i * n + range.start..i * n + range.end]);
        }
        drop(x);
        let l = self.clone();
        let start = range.start;
        Ok(Value::from_op(
            "slice_cols",
            vec![m, w],
            out,
            vec![self.clone()],
            Box::new(move |dc, scratch| {
                scratch.accumulate(&l, |da| {
                    for i in 0..m {
                        for j in 0..w {
                            da[i * n + start + j] += dc[i * w + j];
                        }
                    }
                });
            }),
        ))
    }

    /// Contiguous row slice of a 2-D value.
    pub fn slice_rows(&self, range: Range<usize>) -> Result<Value> {
        let (m, n) = self.require_2d("slice_rows")?;
        if range.end > m || range.start >= range.end {
            return Err(Error::Contract(format!(
                "slice_rows {range:?} out of bounds for {m} rows"
            )));
        }
        let h = range.end - range.start;
        let out = self.data()[range.start * n..range.end * n].to_vec();
        let l = self.clone();
        let start = range.start;
        Ok(Value::from_op(
            "slice_rows",
            vec![h, n],
            out,
            vec![self.clone()],
            Box::new(move |dc, scratch| {
                scratch.accumulate(&l, |da| {
                    for (a, d) in da[start * n..(start + h) * n].iter_mut().zip(dc) {
                        *a += d;
                    }
                });
            }),
        ))
    }

    /// Vertical concatenation of 2-D values with equal column counts.
    pub fn concat_rows(parts: &[Value]) -> Result<Value> {
        if parts.is_empty() {
            return Err(Error::Contract("concat_rows of zero parts".into()));
        }
        let (_, n) = parts[0].require_2d("concat_rows")?;
        let mut rows = 0;
        let mut out = Vec::new();
        for p in parts {
            let (pm, pn) = p.require_2d("concat_rows")?;
            if pn != n {
                return Err(Error::Shape {
                    op: "concat_rows",
                    lhs: parts[0].shape().to_vec(),
                    rhs: p.shape().to_vec(),
                });
            }
            rows += pm;
            out.extend_from_slice(&p.data());
        }
        let owned: Vec<Value> = parts.to_vec();
        Ok(Value::from_op(
            "concat_rows",
            vec![rows, n],
            out,
            owned.clone(),
            Box::new(move |dc, scratch| {
                let mut offset = 0;
                for p in &owned {
                    let len = p.len();
                    let chunk = &dc[offset..offset + len];
                    scratch.accumulate(p, |da| {
                        for (a, d) in da.iter_mut().zip(chunk) {
                            *a += d;
                        }
                    });
                    offset += len;
                }
            }),
        ))
    }

    /// Horizontal concatenation of 2-D values with equal row counts.
    pub fn concat_cols(parts: &[Value]) -> Result<Value> {
        if parts.is_empty() {
            return Err(Error::Contract("concat_cols of zero parts".into()));
        }
        let (m, _) = parts[0].require_2d("concat_cols")?;
        let widths: Vec<usize> = parts
            .iter()
            .map(|p| {
                let (pm, pn) = p.require_2d("concat_cols")?;
                if pm != m {
                    return Err(Error::Shape {
                        op: "concat_cols",
                        lhs: parts[0].shape().to_vec(),
                        rhs: p.shape().to_vec(),
                    });
                }
                Ok(pn)
            })
            .collect::<Result<_>>()?;
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(m * total);
        for i in 0..m {
            for (p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&p.data()[i * w..(i + 1) * w]);
            }
        }
        let owned: Vec<Value> = parts.to_vec();
        Ok(Value::from_op(
            "concat_cols",
            vec![m, total],
            out,
            owned.clone(),
            Box::new(move |dc, scratch| {
                let mut col = 0;
                for p in &owned {
                    let w = p.shape()[1];
                    let here = col;
                    scratch.accumulate(p, |da| {
                        for i in 0..m {
                            for j in 0..w {
                                da[i * w + j] += dc[i * total + here + j];
                            }
                        }
                    });
                    col += w;
                }
            }),
        ))
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Value")
            .field("shape", &self.0.shape)
            .field("requires_grad", &self.0.requires_grad)
            .finish()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Central-difference gradient oracle over a flat coordinate vector:
/// (f(x+eps·eᵢ) − f(x−eps·eᵢ)) / (2·eps) per coordinate.
pub fn finite_difference_gradient(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x: &[f64],
    eps: f64,
) -> Vec<f64> {
    assert!(eps > 0.0, "finite differences need eps > 0");
    let mut xs = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = xs[i];
        xs[i] = orig + eps;
        let plus = f(&xs);
        xs[i] = orig - eps;
        let minus = f(&xs);
        xs[i] = orig;
        grad.push((plus - minus) / (2.0 * eps));
    }
    grad
}

/// Worst-case relative error with a unit floor:
/// max_i |a_i − b_i| / max(1, |a_i|, |b_i|).
pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "gradient length mismatch");
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(shape: &[usize], data: &[f64]) -> Value {
        Value::new(shape, data.to_vec(), false).unwrap()
    }

    fn p(shape: &[usize], data: &[f64]) -> Value {
        Value::new(shape, data.to_vec(), true).unwrap()
    }

    fn random(shape: &[usize], seed: u64) -> Vec<f64> {
        let mut rng = SplitMix64::new(seed);
        (0..shape.iter().product::<usize>())
            .map(|_| rng.next_f64() * 2.0 - 1.0)
            .collect()
    }

    /// Checks d(sum(f(x)))/dx against central differences.
    fn check_unary(f: impl Fn(&Value) -> Value, shape: &[usize], seed: u64, tol: f64) {
        let data = random(shape, seed);
        let x = p(shape, &data);
        let loss = f(&x).sum();
        loss.backward().unwrap();
        let analytic = x.grad().unwrap();
        let shape_owned = shape.to_vec();
        let numeric = finite_difference_gradient(
            &mut |xs| {
                let x = v(&shape_owned, xs);
                f(&x).sum().item()
            },
            &data,
            1e-6,
        );
        let err = max_rel_err(&analytic, &numeric);
        assert!(err < tol, "rel err {err} >= {tol}");
    }

    #[test]
    fn matmul_identity() {
        let a = v(&[2, 2], &[1.0, 0.0, 0.0, 1.0]);
        let b = v(&[2, 2], &[3.0, 4.0, 5.0, 6.0]);
        assert_eq!(a.matmul(&b).unwrap().to_vec(), vec![3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn matmul_zero() {
        let a = v(&[1, 2], &[1.0, 2.0]);
        let b = v(&[2, 1], &[0.0, 0.0]);
        assert_eq!(a.matmul(&b).unwrap().to_vec(), vec![0.0]);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = v(&[2, 3], &[0.0; 6]);
        let b = v(&[2, 2], &[0.0; 4]);
        match a.matmul(&b) {
            Err(Error::Shape { lhs, rhs, .. }) => {
                assert_eq!(lhs, vec![2, 3]);
                assert_eq!(rhs, vec![2, 2]);
            }
            other => panic!("expected shape error, got {other:?}"),
        }
    }

    #[test]
    fn matmul_gradcheck() {
        let a_data = random(&[3, 4], 11);
        let b_data = random(&[4, 2], 12);
        let a = p(&[3, 4], &a_data);
        let b = p(&[4, 2], &b_data);
        a.matmul(&b).unwrap().sum().backward().unwrap();

        let num_a = finite_difference_gradient(
            &mut |xs| {
                v(&[3, 4], xs)
                    .matmul(&v(&[4, 2], &b_data))
                    .unwrap()
                    .sum()
                    .item()
            },
            &a_data,
            1e-6,
        );
        let num_b = finite_difference_gradient(
            &mut |xs| {
                v(&[3, 4], &a_data)
                    .matmul(&v(&[4, 2], xs))
                    .unwrap()
                    .sum()
                    .item()
            },
            &b_data,
            1e-6,
        );
        assert!(max_rel_err(&a.grad().unwrap(), &num_a) < 1e-6);
        assert!(max_rel_err(&b.grad().unwrap(), &num_b) < 1e-6);
    }

    #[test]
    fn matmul_associative() {
        let a = v(&[3, 4], &random(&[3, 4], 1));
        let b = v(&[4, 5], &random(&[4, 5], 2));
        let c = v(&[5, 2], &random(&[5, 2], 3));
        let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        for (x, y) in left.to_vec().iter().zip(right.to_vec()) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0));
        }
    }

    #[test]
    fn softmax_symmetry_and_onehot() {
        let x = v(&[1, 2], &[0.0, 0.0]);
        assert_eq!(x.softmax(1).unwrap().to_vec(), vec![0.5, 0.5]);
        let x = v(&[2, 1], &[0.0, 0.0]);
        assert_eq!(x.softmax(0).unwrap().to_vec(), vec![0.5, 0.5]);

        let x = v(&[1, 2], &[30.0, 0.0]);
        let y = x.softmax(1).unwrap().to_vec();
        assert!((y[0] - 1.0).abs() < 1e-12);
        assert!((y[1] - 9.36e-14).abs() < 1e-15);
        assert!((y[0] + y[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_slices_sum_to_one_and_shift_invariant() {
        for axis in [0, 1] {
            let data = random(&[3, 4], 77 + axis as u64);
            let y = v(&[3, 4], &data).softmax(axis).unwrap();
            let yd = y.to_vec();
            let (slices, stride, len) = if axis == 1 { (3, 1, 4) } else { (4, 4, 3) };
            for s in 0..slices {
                let base = if axis == 1 { s * 4 } else { s };
                let sum: f64 = (0..len).map(|i| yd[base + i * stride]).sum();
                assert!((sum - 1.0).abs() < 1e-12);
            }
            // Adding a constant inside each slice leaves the output fixed.
            let mut shifted = data.clone();
            for (i, x) in shifted.iter_mut().enumerate() {
                let slice = if axis == 1 { i / 4 } else { i % 4 };
                *x += 0.37 * (slice as f64 + 1.0);
            }
            let y2 = v(&[3, 4], &shifted).softmax(axis).unwrap().to_vec();
            for (a, b) in yd.iter().zip(y2) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn softmax_gradcheck_both_axes() {
        check_unary(|x| x.softmax(0).unwrap().mul(&weights()).unwrap(), &[3, 3], 5, 1e-6);
        check_unary(|x| x.softmax(1).unwrap().mul(&weights()).unwrap(), &[3, 3], 6, 1e-6);
    }

    /// Fixed weights so the loss is not constant (sum of softmax is).
    fn weights() -> Value {
        v(&[3, 3], &[0.3, -1.2, 0.7, 2.0, -0.4, 0.1, 1.1, 0.9, -2.2])
    }

    #[test]
    fn silu_values() {
        let x = v(&[2], &[0.0, 1.0]);
        let y = x.silu().to_vec();
        assert_eq!(y[0], 0.0);
        assert!((y[1] - 0.7310585786300049).abs() < 1e-15);
    }

    #[test]
    fn silu_gradcheck_at_spec_points() {
        for (i, &point) in [-2.0, -0.5, 0.0, 0.5, 2.0].iter().enumerate() {
            let x = p(&[1], &[point]);
            x.silu().sum().backward().unwrap();
            let numeric = finite_difference_gradient(
                &mut |xs| v(&[1], xs).silu().sum().item(),
                &[point],
                1e-6,
            );
            let err = max_rel_err(&x.grad().unwrap(), &numeric);
            assert!(err < 1e-6, "point {i}: rel err {err}");
        }
    }

    #[test]
    fn backward_sum_gives_ones() {
        let x = p(&[2, 3], &random(&[2, 3], 9));
        x.sum().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0; 6]);
    }

    #[test]
    fn backward_square() {
        let x = p(&[2], &[1.0, 2.0]);
        x.mul(&x).unwrap().sum().backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![2.0, 4.0]);
    }

    #[test]
    fn backward_requires_scalar() {
        let x = p(&[2], &[1.0, 2.0]);
        assert!(matches!(x.backward(), Err(Error::Contract(_))));
    }

    #[test]
    fn backward_accumulates_across_calls() {
        let x = p(&[2], &[3.0, -1.0]);
        let loss = x.mul(&x).unwrap().sum();
        loss.backward().unwrap();
        loss.backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![12.0, -4.0]); // exactly 2× single-call
    }

    #[test]
    fn backward_handles_reused_subexpression() {
        // loss = sum(x ⊙ x + x ⊙ x): x used four times through a shared node.
        let x = p(&[2], &[1.0, 2.0]);
        let sq = x.mul(&x).unwrap();
        let loss = sq.add(&sq).unwrap().sum();
        loss.backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![4.0, 8.0]);
    }

    #[test]
    fn fd_oracle_trivial_cases() {
        let ones = finite_difference_gradient(&mut |xs| xs.iter().sum(), &[0.3, -2.0, 5.0], 1e-6);
        for g in ones {
            assert!((g - 1.0).abs() < 1e-9);
        }
        let six = finite_difference_gradient(&mut |xs| xs.iter().map(|x| x * x).sum(), &[3.0], 1e-6);
        assert!((six[0] - 6.0).abs() < 1e-6);
    }

    #[test]
    fn fd_agrees_with_backward_on_composite() {
        // matmul + softmax composite, weighted so the loss is non-trivial.
        let w = weights();
        let b_data = random(&[3, 3], 21);
        let data = random(&[3, 3], 20);
        let x = p(&[3, 3], &data);
        let loss = x
            .matmul(&v(&[3, 3], &b_data))
            .unwrap()
            .softmax(1)
            .unwrap()
            .mul(&w)
            .unwrap()
            .sum();
        loss.backward().unwrap();
        let numeric = finite_difference_gradient(
            &mut |xs| {
                v(&[3, 3], xs)
                    .matmul(&v(&[3, 3], &b_data))
                    .unwrap()
                    .softmax(1)
                    .unwrap()
                    .mul(&weights())
                    .unwrap()
                    .sum()
                    .item()
            },
            &data,
            1e-6,
        );
        assert!(max_rel_err(&x.grad().unwrap(), &numeric) < 1e-6);
    }

    #[test]
    fn seeded_init_contract() {
        let z = Value::seeded_init(&[2, 2], InitScheme::Zeros, 0);
        assert_eq!(z.to_vec(), vec![0.0; 4]);
        let o = Value::seeded_init(&[3], InitScheme::Ones, 0);
        assert_eq!(o.to_vec(), vec![1.0; 3]);

        let a = Value::seeded_init(&[4, 7], InitScheme::Normal { std: 0.02 }, 99);
        let b = Value::seeded_init(&[4, 7], InitScheme::Normal { std: 0.02 }, 99);
        assert_eq!(a.to_vec(), b.to_vec()); // bitwise identical
        let c = Value::seeded_init(&[4, 7], InitScheme::Normal { std: 0.02 }, 100);
        assert_ne!(a.to_vec(), c.to_vec());
    }

    #[test]
    fn seeded_init_normal_statistics() {
        let n = 100_000usize;
        let x = Value::seeded_init(&[n], InitScheme::Normal { std: 0.02 }, 7);
        let mean: f64 = x.data().iter().sum::<f64>() / n as f64;
        let sigma = 0.02;
        assert!(mean.abs() < 3.0 * sigma / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn transpose_slice_concat_gradcheck() {
        check_unary(|x| x.transpose().unwrap().mul(&weights()).unwrap(), &[3, 3], 31, 1e-6);
        check_unary(
            |x| {
                let a = x.slice_cols(0..2).unwrap();
                let b = x.slice_cols(2..3).unwrap();
                Value::concat_cols(&[b, a]).unwrap().mul(&weights()).unwrap()
            },
            &[3, 3],
            32,
            1e-6,
        );
        check_unary(
            |x| {
                let a = x.slice_rows(0..1).unwrap();
                let b = x.slice_rows(1..3).unwrap();
                Value::concat_rows(&[b, a]).unwrap().mul(&weights()).unwrap()
            },
            &[3, 3],
            33,
            1e-6,
        );
    }

    #[test]
    fn add_row_gradcheck() {
        let bias_data = random(&[4], 41);
        let x_data = random(&[3, 4], 40);
        let x = p(&[3, 4], &x_data);
        let bias = p(&[4], &bias_data);
        x.add_row(&bias).unwrap().mul(&v(&[3, 4], &random(&[3, 4], 42))).unwrap().sum().backward().unwrap();
        let num_b = finite_difference_gradient(
            &mut |bs| {
                v(&[3, 4], &x_data)
                    .add_row(&v(&[4], bs))
                    .unwrap()
                    .mul(&v(&[3, 4], &random(&[3, 4], 42)))
                    .unwrap()
                    .sum()
                    .item()
            },
            &bias_data,
            1e-6,
        );
        assert!(max_rel_err(&bias.grad().unwrap(), &num_b) < 1e-6);
    }
}
