//! Reverse-mode automatic differentiation on an append-only tape.
//!
//! Every operation appends one [`Node`] holding the materialized forward
//! value, so node indices are already a topological order. [`Tape::backward`]
//! walks the tape once in reverse, giving gradient cost proportional to the
//! number of recorded operations.
//!
//! Nodes created with [`Tape::constant`] are excluded from differentiation;
//! nodes created with [`Tape::leaf`] receive gradients. Derived nodes require
//! gradients exactly when at least one input does.
//!
//! Non-finite forward values are recorded as-is rather than rejected: a
//! diverging training run must surface as an observable non-finite loss term
//! at the batch boundary, not as a panic mid-graph.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::tensor::Tensor;

/// Handle to a node on a [`Tape`]. Only valid for the tape that issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorId(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(TensorId, TensorId),
    Sub(TensorId, TensorId),
    Mul(TensorId, TensorId),
    /// Adds a rank-1 row vector to every row of a matrix.
    AddRow(TensorId, TensorId),
    MatMul(TensorId, TensorId),
    LeakyRelu(TensorId, f64),
    Exp(TensorId),
    Clamp(TensorId, f64, f64),
    /// Elementwise `scale * x + shift`; only the scale matters in backward.
    Affine(TensorId, f64),
    /// Sum of all elements, producing a scalar.
    Sum(TensorId),
    /// Column-wise concatenation of two matrices with equal row counts.
    ConcatCols(TensorId, TensorId),
    /// Row-wise log-softmax of a matrix of logits.
    LogSoftmax(TensorId),
    /// Mean negative log-likelihood of the labels under row-wise softmax.
    NllMean(TensorId, Vec<usize>),
}

struct Node {
    op: Op,
    value: Tensor,
    requires_grad: bool,
}

/// Gradients of a scalar output with respect to tape leaves.
#[derive(Debug)]
pub struct Gradients {
    slots: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient tensor for `id` if one was retained (leaves only).
    pub fn get(&self, id: TensorId) -> Option<&Tensor> {
        self.slots.get(id.0).and_then(|s| s.as_ref())
    }

    /// Gradient for a leaf, with zeros for leaves the output never touched.
    pub fn wrt(&self, id: TensorId, shape_of: &Tensor) -> Tensor {
        match self.get(id) {
            Some(g) => g.clone(),
            None => Tensor::zeros(shape_of.shape().to_vec()),
        }
    }
}

/// Append-only operation record supporting one reverse sweep per call.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Forward value of a node.
    pub fn value(&self, id: TensorId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Records an input excluded from differentiation.
    pub fn constant(&mut self, value: Tensor) -> TensorId {
        self.push(Op::Leaf, value, false)
    }

    /// Records an input that will receive a gradient.
    pub fn leaf(&mut self, value: Tensor) -> TensorId {
        self.push(Op::Leaf, value, true)
    }

    fn push(&mut self, op: Op, value: Tensor, requires_grad: bool) -> TensorId {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        TensorId(self.nodes.len() - 1)
    }

    fn node(&self, id: TensorId) -> &Node {
        &self.nodes[id.0]
    }

    fn requires(&self, ids: &[TensorId]) -> bool {
        ids.iter().any(|i| self.node(*i).requires_grad)
    }

    fn check_same_shape(&self, op: &'static str, a: TensorId, b: TensorId) -> Result<()> {
        let (la, lb) = (self.value(a).shape(), self.value(b).shape());
        if la != lb {
            return Err(Error::ShapeMismatch {
                op,
                left: la.to_vec(),
                right: lb.to_vec(),
            });
        }
        Ok(())
    }

    /// Elementwise sum of two same-shape tensors.
    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.check_same_shape("add", a, b)?;
        let value = zip_map(self.value(a), self.value(b), |x, y| x + y);
        let rg = self.requires(&[a, b]);
        Ok(self.push(Op::Add(a, b), value, rg))
    }

    /// Elementwise difference of two same-shape tensors.
    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.check_same_shape("sub", a, b)?;
        let value = zip_map(self.value(a), self.value(b), |x, y| x - y);
        let rg = self.requires(&[a, b]);
        Ok(self.push(Op::Sub(a, b), value, rg))
    }

    /// Elementwise product of two same-shape tensors.
    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.check_same_shape("mul", a, b)?;
        let value = zip_map(self.value(a), self.value(b), |x, y| x * y);
        let rg = self.requires(&[a, b]);
        Ok(self.push(Op::Mul(a, b), value, rg))
    }

    /// Adds row vector `r` (shape `[k]`) to every row of matrix `m` (shape `[n, k]`).
    pub fn add_row(&mut self, m: TensorId, r: TensorId) -> Result<TensorId> {
        let (_, cols) = self.value(m).dims2().map_err(|_| Error::ShapeMismatch {
            op: "add_row",
            left: self.value(m).shape().to_vec(),
            right: self.value(r).shape().to_vec(),
        })?;
        if self.value(r).shape() != [cols] {
            return Err(Error::ShapeMismatch {
                op: "add_row",
                left: self.value(m).shape().to_vec(),
                right: self.value(r).shape().to_vec(),
            });
        }
        let mv = self.value(m);
        let rv = self.value(r).data();
        let mut data = mv.data().to_vec();
        for row in data.chunks_mut(cols) {
            for (x, y) in row.iter_mut().zip(rv) {
                *x += y;
            }
        }
        let value = Tensor::new(mv.shape().to_vec(), data).expect("shape preserved");
        let rg = self.requires(&[m, r]);
        Ok(self.push(Op::AddRow(m, r), value, rg))
    }

    /// Matrix product of `[n, k] x [k, m]`.
    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (n, ka) = self.value(a).dims2().map_err(|_| Error::ShapeMismatch {
            op: "matmul",
            left: self.value(a).shape().to_vec(),
            right: self.value(b).shape().to_vec(),
        })?;
        let (kb, m) = self.value(b).dims2().map_err(|_| Error::ShapeMismatch {
            op: "matmul",
            left: self.value(a).shape().to_vec(),
            right: self.value(b).shape().to_vec(),
        })?;
        if ka != kb {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: self.value(a).shape().to_vec(),
                right: self.value(b).shape().to_vec(),
            });
        }
        let mut out = vec![0.0; n * m];
        dgemm_rm(
            n,
            ka,
            m,
            1.0,
            self.value(a).data(),
            (ka as isize, 1),
            self.value(b).data(),
            (m as isize, 1),
            0.0,
            &mut out,
            (m as isize, 1),
        );
        let value = Tensor::new([n, m], out).expect("matmul output shape");
        let rg = self.requires(&[a, b]);
        Ok(self.push(Op::MatMul(a, b), value, rg))
    }

    /// Elementwise `max(x, slope * x)` for `slope` in `(0, 1)`.
    pub fn leaky_relu(&mut self, x: TensorId, slope: f64) -> TensorId {
        debug_assert!(slope > 0.0 && slope < 1.0, "slope {slope} outside (0, 1)");
        let value = map(self.value(x), |v| if v >= 0.0 { v } else { slope * v });
        let rg = self.requires(&[x]);
        self.push(Op::LeakyRelu(x, slope), value, rg)
    }

    /// Elementwise exponential.
    pub fn exp(&mut self, x: TensorId) -> TensorId {
        let value = map(self.value(x), math::exp);
        let rg = self.requires(&[x]);
        self.push(Op::Exp(x), value, rg)
    }

    /// Elementwise clamp to `[lo, hi]`; gradient passes only inside the band.
    pub fn clamp(&mut self, x: TensorId, lo: f64, hi: f64) -> TensorId {
        debug_assert!(lo <= hi, "clamp bounds inverted: [{lo}, {hi}]");
        let value = map(self.value(x), |v| math::fmin(math::fmax(v, lo), hi));
        let rg = self.requires(&[x]);
        self.push(Op::Clamp(x, lo, hi), value, rg)
    }

    /// Elementwise `scale * x + shift`.
    pub fn affine(&mut self, x: TensorId, scale: f64, shift: f64) -> TensorId {
        let value = map(self.value(x), |v| scale * v + shift);
        let rg = self.requires(&[x]);
        self.push(Op::Affine(x, scale), value, rg)
    }

    /// Sum of all elements as a scalar.
    pub fn sum(&mut self, x: TensorId) -> TensorId {
        let total: f64 = self.value(x).data().iter().sum();
        let rg = self.requires(&[x]);
        self.push(Op::Sum(x), Tensor::scalar(total), rg)
    }

    /// Mean of all elements as a scalar.
    pub fn mean(&mut self, x: TensorId) -> TensorId {
        let n = self.value(x).numel().max(1);
        let s = self.sum(x);
        self.affine(s, 1.0 / n as f64, 0.0)
    }

    /// Concatenates `[n, k1]` and `[n, k2]` into `[n, k1 + k2]`.
    pub fn concat_cols(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let mismatch = || Error::ShapeMismatch {
            op: "concat_cols",
            left: self.value(a).shape().to_vec(),
            right: self.value(b).shape().to_vec(),
        };
        let (na, ka) = self.value(a).dims2().map_err(|_| mismatch())?;
        let (nb, kb) = self.value(b).dims2().map_err(|_| mismatch())?;
        if na != nb {
            return Err(mismatch());
        }
        let av = self.value(a).data();
        let bv = self.value(b).data();
        let mut data = Vec::with_capacity(na * (ka + kb));
        for i in 0..na {
            data.extend_from_slice(&av[i * ka..(i + 1) * ka]);
            data.extend_from_slice(&bv[i * kb..(i + 1) * kb]);
        }
        let value = Tensor::new([na, ka + kb], data).expect("concat output shape");
        let rg = self.requires(&[a, b]);
        Ok(self.push(Op::ConcatCols(a, b), value, rg))
    }

    /// Row-wise log-softmax, stabilized by per-row max subtraction.
    pub fn log_softmax(&mut self, x: TensorId) -> Result<TensorId> {
        let (n, k) = self.value(x).dims2().map_err(|_| Error::BadShape {
            op: "log_softmax",
            shape: self.value(x).shape().to_vec(),
            reason: "expected rank 2",
        })?;
        let xv = self.value(x).data();
        let mut data = vec![0.0; n * k];
        for i in 0..n {
            let row = &xv[i * k..(i + 1) * k];
            let lse = row_logsumexp(row);
            for j in 0..k {
                data[i * k + j] = row[j] - lse;
            }
        }
        let value = Tensor::new([n, k], data).expect("log_softmax output shape");
        let rg = self.requires(&[x]);
        Ok(self.push(Op::LogSoftmax(x), value, rg))
    }

    /// Mean cross-entropy of integer labels under row-wise softmax of `logits`.
    ///
    /// Fusing the log-softmax and the label gather keeps the backward pass a
    /// single `softmax - onehot` expression.
    pub fn nll_mean(&mut self, logits: TensorId, labels: &[usize]) -> Result<TensorId> {
        let (n, k) = self.value(logits).dims2().map_err(|_| Error::BadShape {
            op: "nll_mean",
            shape: self.value(logits).shape().to_vec(),
            reason: "expected rank 2",
        })?;
        if labels.len() != n {
            return Err(Error::ShapeMismatch {
                op: "nll_mean",
                left: vec![n, k],
                right: vec![labels.len()],
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                classes: k,
            });
        }
        let xv = self.value(logits).data();
        let mut total = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            let row = &xv[i * k..(i + 1) * k];
            total += row_logsumexp(row) - row[y];
        }
        let value = Tensor::scalar(total / n as f64);
        let rg = self.requires(&[logits]);
        Ok(self.push(Op::NllMean(logits, labels.to_vec()), value, rg))
    }

    /// Gradients of the scalar node `output` with respect to every leaf.
    ///
    /// Visits each node at most once, so the cost is linear in tape length.
    pub fn backward(&self, output: TensorId) -> Result<Gradients> {
        let out_node = self.node(output);
        if out_node.value.numel() != 1 {
            return Err(Error::NotScalar {
                shape: out_node.value.shape().to_vec(),
            });
        }
        let mut slots: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        slots[output.0] = Some(Tensor::new(
            out_node.value.shape().to_vec(),
            vec![1.0],
        )
        .expect("unit seed"));

        for i in (0..=output.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            // Intermediates surrender their gradient once propagated; only
            // leaves keep theirs for the caller.
            let Some(g) = slots[i].take() else { continue };
            self.propagate(&node.op, &node.value, &g, &mut slots);
        }

        // Leaves untouched by the output read as zeros.
        for (i, node) in self.nodes.iter().enumerate() {
            if node.requires_grad && matches!(node.op, Op::Leaf) && slots[i].is_none() {
                slots[i] = Some(Tensor::zeros(node.value.shape().to_vec()));
            }
        }
        Ok(Gradients { slots })
    }

    fn propagate(&self, op: &Op, out_value: &Tensor, g: &Tensor, slots: &mut Vec<Option<Tensor>>) {
        match op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.accumulate(slots, *a, g.data().iter().copied());
                self.accumulate(slots, *b, g.data().iter().copied());
            }
            Op::Sub(a, b) => {
                self.accumulate(slots, *a, g.data().iter().copied());
                self.accumulate(slots, *b, g.data().iter().map(|v| -v));
            }
            Op::Mul(a, b) => {
                let av = self.value(*a).data();
                let bv = self.value(*b).data();
                self.accumulate(slots, *a, g.data().iter().zip(bv).map(|(gv, y)| gv * y));
                self.accumulate(slots, *b, g.data().iter().zip(av).map(|(gv, x)| gv * x));
            }
            Op::AddRow(m, r) => {
                self.accumulate(slots, *m, g.data().iter().copied());
                if self.node(*r).requires_grad {
                    let k = self.value(*r).numel();
                    let mut acc = vec![0.0; k];
                    for row in g.data().chunks(k) {
                        for (s, v) in acc.iter_mut().zip(row) {
                            *s += v;
                        }
                    }
                    self.accumulate(slots, *r, acc.into_iter());
                }
            }
            Op::MatMul(a, b) => {
                let (n, k) = self.value(*a).dims2().expect("recorded matmul lhs");
                let (_, m) = self.value(*b).dims2().expect("recorded matmul rhs");
                if self.node(*a).requires_grad {
                    // dA += G * B^T, reading B transposed via swapped strides.
                    let slot = self.grad_slot(slots, *a);
                    dgemm_rm(
                        n,
                        m,
                        k,
                        1.0,
                        g.data(),
                        (m as isize, 1),
                        self.value(*b).data(),
                        (1, m as isize),
                        1.0,
                        slot.data_mut(),
                        (k as isize, 1),
                    );
                }
                if self.node(*b).requires_grad {
                    // dB += A^T * G, reading A transposed via swapped strides.
                    let slot = self.grad_slot(slots, *b);
                    dgemm_rm(
                        k,
                        n,
                        m,
                        1.0,
                        self.value(*a).data(),
                        (1, k as isize),
                        g.data(),
                        (m as isize, 1),
                        1.0,
                        slot.data_mut(),
                        (m as isize, 1),
                    );
                }
            }
            Op::LeakyRelu(x, slope) => {
                let xv = self.value(*x).data();
                self.accumulate(
                    slots,
                    *x,
                    g.data()
                        .iter()
                        .zip(xv)
                        .map(|(gv, v)| if *v >= 0.0 { *gv } else { *gv * slope }),
                );
            }
            Op::Exp(x) => {
                // d/dx exp(x) = exp(x), already materialized as the output.
                self.accumulate(
                    slots,
                    *x,
                    g.data().iter().zip(out_value.data()).map(|(gv, y)| gv * y),
                );
            }
            Op::Clamp(x, lo, hi) => {
                let xv = self.value(*x).data();
                self.accumulate(
                    slots,
                    *x,
                    g.data()
                        .iter()
                        .zip(xv)
                        .map(|(gv, v)| if *v >= *lo && *v <= *hi { *gv } else { 0.0 }),
                );
            }
            Op::Affine(x, scale) => {
                self.accumulate(slots, *x, g.data().iter().map(|gv| gv * scale));
            }
            Op::Sum(x) => {
                let gs = g.item();
                let n = self.value(*x).numel();
                self.accumulate(slots, *x, core::iter::repeat(gs).take(n));
            }
            Op::ConcatCols(a, b) => {
                let (na, ka) = self.value(*a).dims2().expect("recorded concat lhs");
                let (_, kb) = self.value(*b).dims2().expect("recorded concat rhs");
                let k = ka + kb;
                let gd = g.data();
                self.accumulate(
                    slots,
                    *a,
                    (0..na * ka).map(|idx| gd[(idx / ka) * k + idx % ka]),
                );
                self.accumulate(
                    slots,
                    *b,
                    (0..na * kb).map(|idx| gd[(idx / kb) * k + ka + idx % kb]),
                );
            }
            Op::LogSoftmax(x) => {
                // dx = g - softmax * rowsum(g); softmax = exp(output).
                let (n, k) = out_value.dims2().expect("recorded log_softmax");
                let gd = g.data();
                let yv = out_value.data();
                let mut dx = vec![0.0; n * k];
                for i in 0..n {
                    let row_sum: f64 = gd[i * k..(i + 1) * k].iter().sum();
                    for j in 0..k {
                        let idx = i * k + j;
                        dx[idx] = gd[idx] - math::exp(yv[idx]) * row_sum;
                    }
                }
                self.accumulate(slots, *x, dx.into_iter());
            }
            Op::NllMean(x, labels) => {
                // dx = (softmax - onehot) / n, scaled by the incoming scalar.
                let gs = g.item();
                let (n, k) = self.value(*x).dims2().expect("recorded nll_mean");
                let xv = self.value(*x).data();
                let inv_n = 1.0 / n as f64;
                let mut dx = vec![0.0; n * k];
                for i in 0..n {
                    let row = &xv[i * k..(i + 1) * k];
                    let lse = row_logsumexp(row);
                    for j in 0..k {
                        let p = math::exp(row[j] - lse);
                        let onehot = if labels[i] == j { 1.0 } else { 0.0 };
                        dx[i * k + j] = gs * (p - onehot) * inv_n;
                    }
                }
                self.accumulate(slots, *x, dx.into_iter());
            }
        }
    }

    /// Adds an elementwise contribution to the gradient slot of `id`.
    fn accumulate(
        &self,
        slots: &mut [Option<Tensor>],
        id: TensorId,
        contrib: impl Iterator<Item = f64>,
    ) {
        if !self.node(id).requires_grad {
            return;
        }
        let slot = slots[id.0]
            .get_or_insert_with(|| Tensor::zeros(self.value(id).shape().to_vec()));
        for (s, v) in slot.data_mut().iter_mut().zip(contrib) {
            *s += v;
        }
    }

    /// Mutable zero-initialized gradient slot for `id`.
    fn grad_slot<'s>(&self, slots: &'s mut [Option<Tensor>], id: TensorId) -> &'s mut Tensor {
        slots[id.0].get_or_insert_with(|| Tensor::zeros(self.value(id).shape().to_vec()))
    }
}

fn map(t: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::new(
        t.shape().to_vec(),
        t.data().iter().map(|&v| f(v)).collect(),
    )
    .expect("shape preserved")
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    Tensor::new(
        a.shape().to_vec(),
        a.data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| f(x, y))
            .collect(),
    )
    .expect("shape preserved")
}

/// `logsumexp` of one row, stabilized by max subtraction.
fn row_logsumexp(row: &[f64]) -> f64 {
    let m = row.iter().fold(f64::NEG_INFINITY, |a, &b| math::fmax(a, b));
    if !m.is_finite() {
        return m;
    }
    let s: f64 = row.iter().map(|&v| math::exp(v - m)).sum();
    m + math::ln(s)
}

/// Row-major general matrix multiply with explicit strides,
/// `C = alpha * A * B + beta * C`.
#[allow(clippy::too_many_arguments)]
fn dgemm_rm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    beta: f64,
    c: &mut [f64],
    (rsc, csc): (isize, isize),
) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // Buffers are fully owned slices sized by the debug assertion above; the
    // stride descriptions only ever transpose within those bounds.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            rsc,
            csc,
        );
    }
}
