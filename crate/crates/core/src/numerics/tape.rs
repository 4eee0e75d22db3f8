//! Reverse-mode automatic differentiation over a Wengert list.
//!
//! A [`Tape`] records every operation applied to its variables. Calling
//! [`Tape::backward`] on a scalar walks the list in reverse and accumulates
//! gradients into every node that (transitively) depends on a leaf created
//! with `requires_grad = true`. Nodes that do not need a gradient are
//! skipped, so the input image of a network never gets one.

use super::kernels::{self, ConvGeometry, Padding};
use super::rng::Rng;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Scale(Var, f64),
    Sum(Var),
    Relu(Var),
    Dropout(Var, Vec<f64>),
    Reshape(Var),
    Conv2d {
        input: Var,
        kernels: Var,
        bias: Var,
        geometry: ConvGeometry,
    },
    MaxPool(Var, Vec<usize>),
    SoftmaxNll {
        logits: Var,
        probs: Vec<f64>,
        labels: Vec<usize>,
    },
    L2(Vec<Var>, f64),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    grad: Option<Vec<f64>>,
    requires_grad: bool,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn accumulate(slot: &mut Option<Vec<f64>>, delta: &[f64]) {
    match slot {
        Some(g) => {
            for (a, d) in g.iter_mut().zip(delta) {
                *a += d;
            }
        }
        None => *slot = Some(delta.to_vec()),
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, parents: &[Var]) -> Var {
        let requires_grad = parents.iter().any(|p| self.nodes[p.0].requires_grad);
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad,
            op: Op::Leaf,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub fn take_grad(&mut self, v: Var) -> Option<Tensor> {
        let node = &mut self.nodes[v.0];
        let shape = node.value.shape().to_vec();
        node.grad
            .take()
            .map(|g| Tensor::new(shape, g).expect("gradient shape matches value"))
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::dim(format!("matmul of {sa:?} and {sb:?}")));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let out = kernels::matmul(self.value(a).data(), self.value(b).data(), m, k, n);
        let value = Tensor::new(vec![m, n], out)?;
        Ok(self.push(value, Op::MatMul(a, b), &[a, b]))
    }

    /// Adds a `[n]` bias to every row of a `[m, n]` matrix.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(bias));
        if sa.len() != 2 || sb != [sa[1]] {
            return Err(Error::dim(format!("bias {sb:?} for matrix {sa:?}")));
        }
        let n = sa[1];
        let mut out = self.value(a).clone();
        let bv = self.value(bias).data().to_vec();
        for row in out.data_mut().chunks_mut(n) {
            for (x, b) in row.iter_mut().zip(&bv) {
                *x += b;
            }
        }
        Ok(self.push(out, Op::AddBias(a, bias), &[a, bias]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::dim(format!(
                "add of {:?} and {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        let mut out = self.value(a).clone();
        for (x, y) in out.data_mut().iter_mut().zip(self.nodes[b.0].value.data()) {
            *x += y;
        }
        Ok(self.push(out, Op::Add(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let mut out = self.value(a).clone();
        out.data_mut().iter_mut().for_each(|x| *x *= factor);
        self.push(out, Op::Scale(a, factor), &[a])
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let mut out = self.value(a).clone();
        out.data_mut().iter_mut().for_each(|x| *x = x.max(0.0));
        self.push(out, Op::Relu(a), &[a])
    }

    /// Inverted dropout. In evaluation mode, or with `rate == 0`, this is
    /// the identity.
    pub fn dropout(&mut self, a: Var, rate: f64, rng: &mut Rng, training: bool) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::config(format!("dropout rate {rate} outside [0, 1)")));
        }
        let n = self.value(a).len();
        let mask = if training && rate > 0.0 {
            let keep = 1.0 / (1.0 - rate);
            (0..n)
                .map(|_| if rng.uniform() < rate { 0.0 } else { keep })
                .collect()
        } else {
            vec![1.0; n]
        };
        let mut out = self.value(a).clone();
        for (x, m) in out.data_mut().iter_mut().zip(&mask) {
            *x *= m;
        }
        Ok(self.push(out, Op::Dropout(a, mask), &[a]))
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var> {
        let out = self.value(a).clone().reshape(shape)?;
        Ok(self.push(out, Op::Reshape(a), &[a]))
    }

    /// Cross-correlation (no kernel flip) plus per-channel bias.
    ///
    /// `input` is `[C, H, W]` or `[B, C, H, W]`; `kernels` is
    /// `[O, C, kh, kw]`; `bias` is `[O]`.
    pub fn conv2d(&mut self, input: Var, kernels: Var, bias: Var, padding: Padding) -> Result<Var> {
        let si = self.shape(input).to_vec();
        let sk = self.shape(kernels).to_vec();
        let sb = self.shape(bias).to_vec();
        let (squeeze, b, c, h, w) = match *si.as_slice() {
            [c, h, w] => (true, 1, c, h, w),
            [b, c, h, w] => (false, b, c, h, w),
            _ => return Err(Error::dim(format!("conv2d input {si:?} is not 3D/4D"))),
        };
        if sk.len() != 4 || sk[1] != c || sb != [sk[0]] {
            return Err(Error::dim(format!(
                "conv2d input {si:?}, kernels {sk:?}, bias {sb:?}"
            )));
        }
        let g = ConvGeometry::new(b, c, h, w, sk[0], sk[2], sk[3], padding).ok_or_else(|| {
            Error::dim(format!(
                "kernel {:?} larger than padded input {si:?}",
                &sk[2..]
            ))
        })?;
        let out = kernels::conv2d_forward(
            &g,
            self.value(input).data(),
            self.value(kernels).data(),
            self.value(bias).data(),
        );
        let shape = if squeeze {
            vec![g.out_channels, g.out_h, g.out_w]
        } else {
            vec![b, g.out_channels, g.out_h, g.out_w]
        };
        let value = Tensor::new(shape, out)?;
        Ok(self.push(
            value,
            Op::Conv2d {
                input,
                kernels,
                bias,
                geometry: g,
            },
            &[input, kernels, bias],
        ))
    }

    /// Max pooling over the last two axes of a 3D or 4D tensor.
    pub fn maxpool2d(&mut self, input: Var, window: usize, stride: usize) -> Result<Var> {
        if window == 0 || stride == 0 {
            return Err(Error::config("pool window and stride must be >= 1"));
        }
        let s = self.shape(input).to_vec();
        if s.len() < 3 {
            return Err(Error::dim(format!("maxpool input {s:?} must be 3D or 4D")));
        }
        let (h, w) = (s[s.len() - 2], s[s.len() - 1]);
        if window > h || window > w {
            return Err(Error::dim(format!(
                "pool window {window} exceeds input {s:?}"
            )));
        }
        let planes: usize = s[..s.len() - 2].iter().product();
        let (out, arg, oh, ow) =
            kernels::maxpool_forward(self.value(input).data(), planes, h, w, window, stride);
        let mut shape = s[..s.len() - 2].to_vec();
        shape.extend([oh, ow]);
        let value = Tensor::new(shape, out)?;
        Ok(self.push(value, Op::MaxPool(input, arg), &[input]))
    }

    /// Mean negative log-likelihood of softmax(`logits`) at `labels`.
    pub fn softmax_nll(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let s = self.shape(logits);
        if s.len() != 2 || s[0] != labels.len() {
            return Err(Error::dim(format!(
                "logits {s:?} with {} labels",
                labels.len()
            )));
        }
        let (batch, classes) = (s[0], s[1]);
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::Index(format!("label {bad} outside 0..{classes}")));
        }
        let probs = softmax_rows(self.value(logits).data(), classes);
        let loss = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| -log_softmax_at(&self.value(logits).data()[i * classes..][..classes], l))
            .sum::<f64>()
            / batch as f64;
        Ok(self.push(
            Tensor::scalar(loss),
            Op::SoftmaxNll {
                logits,
                probs,
                labels: labels.to_vec(),
            },
            &[logits],
        ))
    }

    /// `coefficient * sum ||w||^2` over `params`.
    pub fn l2_penalty(&mut self, params: &[Var], coefficient: f64) -> Result<Var> {
        if coefficient < 0.0 || !coefficient.is_finite() {
            return Err(Error::config(format!(
                "L2 coefficient {coefficient} must be >= 0"
            )));
        }
        let total: f64 = params.iter().map(|&p| self.value(p).sum_squares()).sum();
        Ok(self.push(
            Tensor::scalar(coefficient * total),
            Op::L2(params.to_vec(), coefficient),
            params,
        ))
    }

    /// Back-propagates from a scalar node, seeding its gradient with 1.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::dim(format!(
                "backward needs a scalar, got {:?}",
                self.shape(loss)
            )));
        }
        self.nodes[loss.0].grad = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let (before, rest) = self.nodes.split_at_mut(i);
            let node = &mut rest[0];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = node.grad.as_ref() else {
                continue;
            };
            let want = |v: Var, before: &[Node]| before[v.0].requires_grad;
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (sa, sb) = (before[a.0].value.shape(), before[b.0].value.shape());
                    let (m, k, n) = (sa[0], sa[1], sb[1]);
                    let (da, db) = kernels::matmul_backward(
                        before[a.0].value.data(),
                        before[b.0].value.data(),
                        g,
                        m,
                        k,
                        n,
                    );
                    if want(*a, before) {
                        accumulate(&mut before[a.0].grad, &da);
                    }
                    if want(*b, before) {
                        accumulate(&mut before[b.0].grad, &db);
                    }
                }
                Op::AddBias(a, bias) => {
                    if want(*a, before) {
                        accumulate(&mut before[a.0].grad, g);
                    }
                    if want(*bias, before) {
                        let n = before[bias.0].value.len();
                        let mut gb = vec![0.0; n];
                        for row in g.chunks(n) {
                            for (acc, x) in gb.iter_mut().zip(row) {
                                *acc += x;
                            }
                        }
                        accumulate(&mut before[bias.0].grad, &gb);
                    }
                }
                Op::Add(a, b) => {
                    for v in [a, b] {
                        if want(*v, before) {
                            accumulate(&mut before[v.0].grad, g);
                        }
                    }
                }
                Op::Scale(a, f) => {
                    let d: Vec<f64> = g.iter().map(|x| x * f).collect();
                    accumulate(&mut before[a.0].grad, &d);
                }
                Op::Sum(a) => {
                    let d = vec![g[0]; before[a.0].value.len()];
                    accumulate(&mut before[a.0].grad, &d);
                }
                Op::Relu(a) => {
                    let d: Vec<f64> = g
                        .iter()
                        .zip(before[a.0].value.data())
                        .map(|(gi, &x)| if x > 0.0 { *gi } else { 0.0 })
                        .collect();
                    accumulate(&mut before[a.0].grad, &d);
                }
                Op::Dropout(a, mask) => {
                    let d: Vec<f64> = g.iter().zip(mask).map(|(gi, m)| gi * m).collect();
                    accumulate(&mut before[a.0].grad, &d);
                }
                Op::Reshape(a) => accumulate(&mut before[a.0].grad, g),
                Op::Conv2d {
                    input,
                    kernels: k,
                    bias,
                    geometry,
                } => {
                    let need_input = want(*input, before);
                    let grads = kernels::conv2d_backward(
                        geometry,
                        before[input.0].value.data(),
                        before[k.0].value.data(),
                        g,
                        need_input,
                    );
                    if let Some(gi) = grads.input {
                        accumulate(&mut before[input.0].grad, &gi);
                    }
                    if want(*k, before) {
                        accumulate(&mut before[k.0].grad, &grads.kernels);
                    }
                    if want(*bias, before) {
                        accumulate(&mut before[bias.0].grad, &grads.bias);
                    }
                }
                Op::MaxPool(a, arg) => {
                    let mut d = vec![0.0; before[a.0].value.len()];
                    for (gi, &idx) in g.iter().zip(arg) {
                        d[idx] += gi;
                    }
                    accumulate(&mut before[a.0].grad, &d);
                }
                Op::SoftmaxNll {
                    logits,
                    probs,
                    labels,
                } => {
                    let batch = labels.len();
                    let classes = probs.len() / batch.max(1);
                    let scale = g[0] / batch as f64;
                    let mut d: Vec<f64> = probs.iter().map(|p| p * scale).collect();
                    for (i, &l) in labels.iter().enumerate() {
                        d[i * classes + l] -= scale;
                    }
                    accumulate(&mut before[logits.0].grad, &d);
                }
                Op::L2(params, coef) => {
                    let f = 2.0 * coef * g[0];
                    for p in params {
                        if want(*p, before) {
                            let d: Vec<f64> =
                                before[p.0].value.data().iter().map(|w| f * w).collect();
                            accumulate(&mut before[p.0].grad, &d);
                        }
                    }
                }
            }
            if !matches!(node.op, Op::Leaf) {
                node.grad = None;
            }
        }
        Ok(())
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &[f64], classes: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.chunks(classes) {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|x| (x - m).exp()).collect();
        let z: f64 = exps.iter().sum();
        out.extend(exps.iter().map(|e| e / z));
    }
    out
}

fn log_softmax_at(row: &[f64], index: usize) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = row.iter().map(|x| (x - m).exp()).sum();
    row[index] - m - z.ln()
}
