//! Reverse-mode differentiation over a recorded tape of tensor ops.
//!
//! Values are computed eagerly when an op is pushed; [`Tape::backward`] walks
//! the nodes in reverse and accumulates gradients. Shape mismatches inside
//! individual ops are programming errors and panic; user-facing shape checks
//! live one level up (see [`super::mlp::Mlp::forward`]).

use super::params::ParamStore;
use super::tensor::{gemm, Operand, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// `[n, m] + [1, m]`, bias broadcast over rows.
    AddRowBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Tanh(Var),
    LeakyRelu(Var, f64),
    Exp(Var),
    Square(Var),
    Clamp(Var, f64, f64),
    SumAll(Var),
    MeanAll(Var),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize, usize),
    /// Mean binary cross-entropy of logits against fixed 0/1 targets.
    BceWithLogits(Var, Vec<f64>),
    LogSumExpRows(Var),
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
    param: Option<String>,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of every node reached by a backward pass.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads[v.0].as_ref()
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

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            param: None,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Input that receives no gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Differentiable leaf with no parameter binding.
    pub fn variable(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Leaf bound to a parameter; its gradient lands in the store on backward.
    pub fn param(&mut self, store: &ParamStore, path: &str) -> Result<Var> {
        let value = store.get(path)?.clone();
        let v = self.push(value, Op::Leaf, true);
        self.nodes[v.0].param = Some(path.to_string());
        Ok(v)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self
            .value(a)
            .matmul(self.value(b))
            .unwrap_or_else(|e| panic!("{e}"));
        let rg = self.rg(a) || self.rg(b);
        self.push(value, Op::MatMul(a, b), rg)
    }

    pub fn add_row_bias(&mut self, x: Var, bias: Var) -> Var {
        let xv = self.value(x);
        let bv = self.value(bias);
        let m = xv.cols();
        assert_eq!(bv.len(), m, "bias length {} for {} columns", bv.len(), m);
        let mut out = xv.clone();
        for row in out.data_mut().chunks_mut(m) {
            for (o, b) in row.iter_mut().zip(bv.data()) {
                *o += b;
            }
        }
        let rg = self.rg(x) || self.rg(bias);
        self.push(out, Op::AddRowBias(x, bias), rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        let rg = self.rg(a) || self.rg(b);
        self.push(v, Op::Add(a, b), rg)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        let rg = self.rg(a) || self.rg(b);
        self.push(v, Op::Sub(a, b), rg)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        let rg = self.rg(a) || self.rg(b);
        self.push(v, Op::Mul(a, b), rg)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| c * x);
        let rg = self.rg(a);
        self.push(v, Op::Scale(a, c), rg)
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| x + c);
        let rg = self.rg(a);
        self.push(v, Op::AddScalar(a), rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::tanh);
        let rg = self.rg(a);
        self.push(v, Op::Tanh(a), rg)
    }

    pub fn leaky_relu(&mut self, a: Var, alpha: f64) -> Var {
        let v = self.value(a).map(|x| if x > 0.0 { x } else { alpha * x });
        let rg = self.rg(a);
        self.push(v, Op::LeakyRelu(a, alpha), rg)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::exp);
        let rg = self.rg(a);
        self.push(v, Op::Exp(a), rg)
    }

    pub fn square(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x * x);
        let rg = self.rg(a);
        self.push(v, Op::Square(a), rg)
    }

    /// Elementwise clamp; gradient passes only where the input is inside `[lo, hi]`.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        let v = self.value(a).map(|x| x.clamp(lo, hi));
        let rg = self.rg(a);
        self.push(v, Op::Clamp(a, lo, hi), rg)
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let v = Tensor::scalar(self.value(a).sum());
        let rg = self.rg(a);
        self.push(v, Op::SumAll(a), rg)
    }

    pub fn mean_all(&mut self, a: Var) -> Var {
        let v = Tensor::scalar(self.value(a).mean());
        let rg = self.rg(a);
        self.push(v, Op::MeanAll(a), rg)
    }

    /// Concatenate 2-D tensors with equal row counts along columns.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat of zero tensors");
        let rows = self.value(parts[0]).rows();
        let widths: Vec<usize> = parts
            .iter()
            .map(|&p| {
                let t = self.value(p);
                assert_eq!(t.rows(), rows, "concat row mismatch");
                t.cols()
            })
            .collect();
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(rows * total);
        for i in 0..rows {
            for &p in parts {
                out.extend_from_slice(self.value(p).row(i));
            }
        }
        let value = Tensor::matrix(rows, total, out).expect("concat shape");
        let rg = parts.iter().any(|&p| self.rg(p));
        self.push(value, Op::ConcatCols(parts.to_vec()), rg)
    }

    /// Columns `start..end` of a 2-D tensor.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Var {
        let t = self.value(a);
        assert!(start <= end && end <= t.cols(), "slice out of range");
        let rows = t.rows();
        let mut out = Vec::with_capacity(rows * (end - start));
        for i in 0..rows {
            out.extend_from_slice(&t.row(i)[start..end]);
        }
        let value = Tensor::matrix(rows, end - start, out).expect("slice shape");
        let rg = self.rg(a);
        self.push(value, Op::SliceCols(a, start, end), rg)
    }

    /// Mean over rows of `softplus(z) - t·z`, the cross-entropy in nats.
    pub fn bce_with_logits(&mut self, logits: Var, targets: &[f64]) -> Var {
        let z = self.value(logits);
        assert_eq!(z.len(), targets.len(), "one logit per target");
        let n = targets.len() as f64;
        let loss: f64 = z
            .data()
            .iter()
            .zip(targets)
            .map(|(&z, &t)| softplus(z) - t * z)
            .sum::<f64>()
            / n;
        let rg = self.rg(logits);
        self.push(
            Tensor::scalar(loss),
            Op::BceWithLogits(logits, targets.to_vec()),
            rg,
        )
    }

    /// Row-wise log-sum-exp, shape `[n, 1]`.
    pub fn logsumexp_rows(&mut self, a: Var) -> Var {
        let v = Tensor::column(&self.value(a).logsumexp_rows());
        let rg = self.rg(a);
        self.push(v, Op::LogSumExpRows(a), rg)
    }

    /// Back-propagates from a scalar node. Parameter gradients are added to
    /// the store's gradient buffers.
    pub fn backward(&self, loss: Var, store: &mut ParamStore) -> Result<Gradients> {
        let lt = self.value(loss);
        if !lt.is_scalar() {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lt.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::filled(lt.shape(), 1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if node.requires_grad {
                self.propagate(node, &g, &mut grads);
            }
            grads[idx] = Some(g);
        }

        for (idx, node) in self.nodes.iter().enumerate() {
            if let (Some(path), Some(g)) = (&node.param, &grads[idx]) {
                store.grad_mut(path)?.add_assign(g);
            }
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let av = self.value(*a);
                let bv = self.value(*b);
                let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                if self.rg(*a) {
                    // dA = G · Bᵀ
                    let buf = grad_buf(grads, *a, av.shape());
                    gemm(m, n, k, Operand::plain(g), Operand::transposed(bv), 1.0, buf);
                }
                if self.rg(*b) {
                    // dB = Aᵀ · G
                    let buf = grad_buf(grads, *b, bv.shape());
                    gemm(k, m, n, Operand::transposed(av), Operand::plain(g), 1.0, buf);
                }
            }
            Op::AddRowBias(x, bias) => {
                if self.rg(*x) {
                    grad_buf(grads, *x, g.shape()).add_assign(g);
                }
                if self.rg(*bias) {
                    let bshape = self.value(*bias).shape().to_vec();
                    let m = g.cols();
                    let buf = grad_buf(grads, *bias, &bshape);
                    for row in g.data().chunks(m) {
                        for (o, v) in buf.data_mut().iter_mut().zip(row) {
                            *o += v;
                        }
                    }
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g);
                self.accumulate(grads, *b, g);
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g);
                if self.rg(*b) {
                    let buf = grad_buf(grads, *b, g.shape());
                    for (o, v) in buf.data_mut().iter_mut().zip(g.data()) {
                        *o -= v;
                    }
                }
            }
            Op::Mul(a, b) => {
                if self.rg(*a) {
                    let d = g.zip_map(self.value(*b), |g, y| g * y);
                    self.accumulate(grads, *a, &d);
                }
                if self.rg(*b) {
                    let d = g.zip_map(self.value(*a), |g, x| g * x);
                    self.accumulate(grads, *b, &d);
                }
            }
            Op::Scale(a, c) => self.accumulate(grads, *a, &g.map(|v| c * v)),
            Op::AddScalar(a) => self.accumulate(grads, *a, g),
            Op::Tanh(a) => {
                let d = g.zip_map(&node.value, |g, y| g * (1.0 - y * y));
                self.accumulate(grads, *a, &d);
            }
            Op::LeakyRelu(a, alpha) => {
                let d = g.zip_map(self.value(*a), |g, x| if x > 0.0 { g } else { alpha * g });
                self.accumulate(grads, *a, &d);
            }
            Op::Exp(a) => {
                let d = g.zip_map(&node.value, |g, y| g * y);
                self.accumulate(grads, *a, &d);
            }
            Op::Square(a) => {
                let d = g.zip_map(self.value(*a), |g, x| 2.0 * g * x);
                self.accumulate(grads, *a, &d);
            }
            Op::Clamp(a, lo, hi) => {
                let d = g.zip_map(self.value(*a), |g, x| if x >= *lo && x <= *hi { g } else { 0.0 });
                self.accumulate(grads, *a, &d);
            }
            Op::SumAll(a) => {
                let s = g.item();
                let shape = self.value(*a).shape().to_vec();
                self.accumulate(grads, *a, &Tensor::filled(&shape, s));
            }
            Op::MeanAll(a) => {
                let av = self.value(*a);
                let s = g.item() / av.len() as f64;
                let shape = av.shape().to_vec();
                self.accumulate(grads, *a, &Tensor::filled(&shape, s));
            }
            Op::ConcatCols(parts) => {
                let total = g.cols();
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).cols();
                    if self.rg(p) {
                        let shape = self.value(p).shape().to_vec();
                        let buf = grad_buf(grads, p, &shape);
                        for (i, row) in buf.data_mut().chunks_mut(w).enumerate() {
                            let src = &g.data()[i * total + offset..i * total + offset + w];
                            for (o, v) in row.iter_mut().zip(src) {
                                *o += v;
                            }
                        }
                    }
                    offset += w;
                }
            }
            Op::SliceCols(a, start, end) => {
                if self.rg(*a) {
                    let shape = self.value(*a).shape().to_vec();
                    let cols = shape[1];
                    let w = end - start;
                    let buf = grad_buf(grads, *a, &shape);
                    for (i, row) in g.data().chunks(w).enumerate() {
                        let dst = &mut buf.data_mut()[i * cols + start..i * cols + end];
                        for (o, v) in dst.iter_mut().zip(row) {
                            *o += v;
                        }
                    }
                }
            }
            Op::BceWithLogits(z, targets) => {
                let zv = self.value(*z);
                let s = g.item() / targets.len() as f64;
                let d: Vec<f64> = zv
                    .data()
                    .iter()
                    .zip(targets)
                    .map(|(&z, &t)| s * (sigmoid(z) - t))
                    .collect();
                let d = Tensor::new(zv.shape().to_vec(), d).expect("bce grad shape");
                self.accumulate(grads, *z, &d);
            }
            Op::LogSumExpRows(a) => {
                let av = self.value(*a);
                let m = av.cols();
                let mut d = Tensor::zeros(av.shape());
                for (i, row) in d.data_mut().chunks_mut(m).enumerate() {
                    let lse = node.value.data()[i];
                    let gi = g.data()[i];
                    for (o, &x) in row.iter_mut().zip(av.row(i)) {
                        *o = gi * (x - lse).exp();
                    }
                }
                self.accumulate(grads, *a, &d);
            }
        }
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, g: &Tensor) {
        if !self.rg(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(buf) => buf.add_assign(g),
            slot @ None => *slot = Some(g.clone()),
        }
    }
}

fn grad_buf<'a>(grads: &'a mut [Option<Tensor>], v: Var, shape: &[usize]) -> &'a mut Tensor {
    grads[v.0].get_or_insert_with(|| Tensor::zeros(shape))
}

pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_store(path: &str, v: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.insert(path, Tensor::scalar(v));
        s
    }

    #[test]
    fn square_gradient() {
        let mut store = scalar_store("theta", 3.0);
        let mut tape = Tape::new();
        let t = tape.param(&store, "theta").unwrap();
        let l = tape.square(t);
        tape.backward(l, &mut store).unwrap();
        assert_eq!(store.grad("theta").unwrap().item(), 6.0);
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let mut store = scalar_store("theta", 3.0);
        let mut tape = Tape::new();
        let _t = tape.param(&store, "theta").unwrap();
        let c = tape.constant(Tensor::scalar(5.0));
        let l = tape.square(c);
        tape.backward(l, &mut store).unwrap();
        assert_eq!(store.grad("theta").unwrap().item(), 0.0);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut store = ParamStore::new();
        let mut tape = Tape::new();
        let v = tape.variable(Tensor::zeros(&[2, 2]));
        assert!(matches!(tape.backward(v, &mut store), Err(Error::Contract(_))));
    }

    #[test]
    fn reused_leaf_accumulates() {
        let mut store = scalar_store("theta", 2.0);
        let mut tape = Tape::new();
        let t = tape.param(&store, "theta").unwrap();
        let p = tape.mul(t, t);
        let l = tape.add(p, t);
        tape.backward(l, &mut store).unwrap();
        assert_eq!(store.grad("theta").unwrap().item(), 5.0);
    }

    /// Checks every op against central differences on a small composite graph.
    #[test]
    fn composite_graph_matches_finite_differences() {
        let x0 = vec![0.3, -0.7, 1.1, 0.2, -0.4, 0.9];
        let build = |x: &[f64], tape: &mut Tape| -> (Var, Var) {
            let v = tape.variable(Tensor::matrix(2, 3, x.to_vec()).unwrap());
            let w = tape.constant(
                Tensor::matrix(3, 2, vec![0.5, -1.0, 0.25, 0.75, -0.3, 0.1]).unwrap(),
            );
            let b = tape.constant(Tensor::new(vec![2], vec![0.1, -0.2]).unwrap());
            let h = tape.matmul(v, w);
            let h = tape.add_row_bias(h, b);
            let t = tape.tanh(h);
            let lr = tape.leaky_relu(v, 0.3);
            let e = tape.exp(lr);
            let c = tape.clamp(e, 0.0, 2.5);
            let cat = tape.concat_cols(&[t, c]);
            let s = tape.slice_cols(cat, 1, 4);
            let sq = tape.square(s);
            let lse = tape.logsumexp_rows(sq);
            let z = tape.scale(lse, 0.5);
            let z = tape.add_scalar(z, -1.0);
            let bce = tape.bce_with_logits(z, &[1.0, 0.0]);
            let m = tape.mean_all(cat);
            let prod = tape.mul(m, bce);
            let sum = tape.sum_all(sq);
            let loss = tape.sub(prod, sum);
            (v, loss)
        };
        let mut tape = Tape::new();
        let (v, loss) = build(&x0, &mut tape);
        let mut store = ParamStore::new();
        let grads = tape.backward(loss, &mut store).unwrap();
        let g = grads.get(v).unwrap().clone();
        let h = 1e-6;
        for i in 0..x0.len() {
            let mut xp = x0.clone();
            xp[i] += h;
            let mut xm = x0.clone();
            xm[i] -= h;
            let mut tp = Tape::new();
            let (_, lp) = build(&xp, &mut tp);
            let mut tm = Tape::new();
            let (_, lm) = build(&xm, &mut tm);
            let fd = (tp.value(lp).item() - tm.value(lm).item()) / (2.0 * h);
            let an = g.data()[i];
            assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "i={i} fd={fd} an={an}");
        }
    }

    #[test]
    fn softplus_and_sigmoid_are_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(-1000.0), 0.0);
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
    }
}
