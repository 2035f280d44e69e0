use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::adjoint::adjoint_expval_grad;
use crate::error::{config_err, Result};
use crate::matrix::Matrix;
use crate::qsim::{run_circuit, run_circuit_batched, CircuitProgram};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op<'p> {
    Leaf,
    /// `y = x W^T + b` with `W` stored row-major as `out x in`.
    Linear {
        w: NodeId,
        b: NodeId,
        x: NodeId,
        out: usize,
    },
    Sigmoid(NodeId),
    Tanh(NodeId),
    Atan(NodeId),
    Mul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Scale(NodeId, f64),
    Outer(NodeId, NodeId),
    Concat(NodeId, NodeId),
    Quantum {
        program: &'p CircuitProgram,
        angles: NodeId,
    },
    Mse {
        pred: NodeId,
        target: NodeId,
    },
}

#[derive(Debug, Clone)]
struct Node<'p> {
    op: Op<'p>,
    value: Matrix,
    requires_grad: bool,
}

/// Reverse-mode record of a mixed classical/quantum computation.
///
/// Every value is a `rows x cols` matrix whose rows are the batch. A node
/// with a single row broadcasts against batched operands; its gradient is
/// summed over the batch. Nodes are appended in evaluation order, so the
/// tape is always topologically sorted.
#[derive(Debug, Clone, Default)]
pub struct Tape<'p> {
    nodes: Vec<Node<'p>>,
}

#[inline]
fn bidx(rows: usize, b: usize) -> usize {
    if rows == 1 {
        0
    } else {
        b
    }
}

fn broadcast_rows(a: &Matrix, b: &Matrix) -> Result<usize> {
    match (a.rows(), b.rows()) {
        (x, y) if x == y => Ok(x),
        (1, y) => Ok(y),
        (x, 1) => Ok(x),
        (x, y) => Err(config_err(format!("cannot broadcast {x} rows against {y} rows"))),
    }
}

impl<'p> Tape<'p> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op<'p>, value: Matrix, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn rg(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    /// Trainable leaf: a single row broadcast over the batch.
    pub fn param(&mut self, values: &[f64]) -> NodeId {
        self.push(Op::Leaf, Matrix::row_vector(values.to_vec()), true)
    }

    /// Leaf that receives no gradient.
    pub fn constant(&mut self, value: Matrix) -> NodeId {
        self.push(Op::Leaf, value, false)
    }

    pub fn linear(&mut self, w: NodeId, b: NodeId, x: NodeId, out: usize) -> Result<NodeId> {
        let (wv, bv, xv) = (self.value(w), self.value(b), self.value(x));
        let inp = xv.cols();
        if wv.rows() != 1 || wv.cols() != out * inp || bv.rows() != 1 || bv.cols() != out {
            return Err(config_err(format!(
                "linear {inp}->{out}: weight is {}x{}, bias is {}x{}",
                wv.rows(),
                wv.cols(),
                bv.rows(),
                bv.cols()
            )));
        }
        let wd = wv.as_slice();
        let bd = bv.as_slice();
        let mut y = Matrix::zeros(xv.rows(), out);
        for (r, xr) in xv.iter_rows().enumerate() {
            for (o, yo) in y.row_mut(r).iter_mut().enumerate() {
                let wr = &wd[o * inp..(o + 1) * inp];
                *yo = wr.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>() + bd[o];
            }
        }
        let rg = self.rg(w) || self.rg(b) || self.rg(x);
        Ok(self.push(Op::Linear { w, b, x, out }, y, rg))
    }

    fn unary(&mut self, x: NodeId, op: Op<'p>, f: impl Fn(f64) -> f64) -> NodeId {
        let mut v = self.value(x).clone();
        v.as_mut_slice().iter_mut().for_each(|e| *e = f(*e));
        let rg = self.rg(x);
        self.push(op, v, rg)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        self.unary(x, Op::Sigmoid(x), sigmoid)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        self.unary(x, Op::Tanh(x), libm::tanh)
    }

    pub fn atan(&mut self, x: NodeId) -> NodeId {
        self.unary(x, Op::Atan(x), libm::atan)
    }

    pub fn scale(&mut self, x: NodeId, k: f64) -> NodeId {
        self.unary(x, Op::Scale(x, k), |e| k * e)
    }

    fn elementwise(&mut self, a: NodeId, b: NodeId, op: Op<'p>, f: impl Fn(f64, f64) -> f64) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.cols() {
            return Err(config_err(format!(
                "elementwise op on {} and {} columns",
                av.cols(),
                bv.cols()
            )));
        }
        let rows = broadcast_rows(av, bv)?;
        let mut out = Matrix::zeros(rows, av.cols());
        for r in 0..rows {
            let (ar, br) = (av.row(bidx(av.rows(), r)), bv.row(bidx(bv.rows(), r)));
            for ((o, x), y) in out.row_mut(r).iter_mut().zip(ar).zip(br) {
                *o = f(*x, *y);
            }
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(op, out, rg))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.elementwise(a, b, Op::Mul(a, b), |x, y| x * y)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.elementwise(a, b, Op::Add(a, b), |x, y| x + y)
    }

    /// Row-wise outer product `u v^T`, flattened row-major to `m * n` columns.
    pub fn outer(&mut self, u: NodeId, v: NodeId) -> Result<NodeId> {
        let (uv, vv) = (self.value(u), self.value(v));
        let rows = broadcast_rows(uv, vv)?;
        let (m, n) = (uv.cols(), vv.cols());
        let mut out = Matrix::zeros(rows, m * n);
        for r in 0..rows {
            let (ur, vr) = (uv.row(bidx(uv.rows(), r)), vv.row(bidx(vv.rows(), r)));
            let o = out.row_mut(r);
            for (i, ui) in ur.iter().enumerate() {
                for (j, vj) in vr.iter().enumerate() {
                    o[i * n + j] = ui * vj;
                }
            }
        }
        let rg = self.rg(u) || self.rg(v);
        Ok(self.push(Op::Outer(u, v), out, rg))
    }

    /// Column-wise concatenation `[a, b]`.
    pub fn concat(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (av, bv) = (self.value(a), self.value(b));
        let rows = broadcast_rows(av, bv)?;
        let mut out = Matrix::zeros(rows, av.cols() + bv.cols());
        for r in 0..rows {
            let o = out.row_mut(r);
            o[..av.cols()].copy_from_slice(av.row(bidx(av.rows(), r)));
            o[av.cols()..].copy_from_slice(bv.row(bidx(bv.rows(), r)));
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Concat(a, b), out, rg))
    }

    /// Circuit evaluation: `angles` is `B x P` in slot order, the result is
    /// `B x K`. Batches run in one broadcast pass; a single row runs on the
    /// single-state path.
    pub fn quantum(&mut self, program: &'p CircuitProgram, angles: NodeId) -> Result<NodeId> {
        let av = self.value(angles);
        let out = if av.rows() == 1 {
            Matrix::row_vector(run_circuit(program, av.row(0))?)
        } else {
            run_circuit_batched(program, av)?
        };
        let rg = self.rg(angles);
        Ok(self.push(Op::Quantum { program, angles }, out, rg))
    }

    /// Mean squared error over every entry; a `1 x 1` node.
    pub fn mse_loss(&mut self, pred: NodeId, target: NodeId) -> Result<NodeId> {
        let (pv, tv) = (self.value(pred), self.value(target));
        if pv.rows() != tv.rows() || pv.cols() != tv.cols() {
            return Err(config_err(format!(
                "mse between {}x{} and {}x{}",
                pv.rows(),
                pv.cols(),
                tv.rows(),
                tv.cols()
            )));
        }
        let n = pv.as_slice().len().max(1) as f64;
        let loss = pv
            .as_slice()
            .iter()
            .zip(tv.as_slice())
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / n;
        let rg = self.rg(pred) || self.rg(target);
        Ok(self.push(Op::Mse { pred, target }, Matrix::row_vector(vec![loss]), rg))
    }

    /// Reverse sweep from a scalar node. Each node is visited once, in
    /// reverse recording order; quantum nodes run one adjoint sweep per
    /// sample.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.rows() != 1 || lv.cols() != 1 {
            return Err(config_err(format!(
                "backward needs a scalar loss, node is {}x{}",
                lv.rows(),
                lv.cols()
            )));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Matrix::row_vector(vec![1.0]));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(node, &g, &mut grads)?;
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node<'p>, g: &Matrix, grads: &mut [Option<Matrix>]) -> Result<()> {
        let mut acc = |id: NodeId, f: &mut dyn FnMut(&mut Matrix)| {
            if !self.nodes[id.0].requires_grad {
                return;
            }
            let v = &self.nodes[id.0].value;
            let slot = grads[id.0].get_or_insert_with(|| Matrix::zeros(v.rows(), v.cols()));
            f(slot);
        };
        let rows = node.value.rows();
        match node.op {
            Op::Leaf => {}
            Op::Linear { w, b, x, out } => {
                let xv = self.value(x);
                let wv = self.value(w).as_slice();
                let inp = xv.cols();
                acc(w, &mut |gw| {
                    let gw = gw.as_mut_slice();
                    for r in 0..rows {
                        let (gr, xr) = (g.row(r), xv.row(r));
                        for o in 0..out {
                            for i in 0..inp {
                                gw[o * inp + i] += gr[o] * xr[i];
                            }
                        }
                    }
                });
                acc(b, &mut |gb| {
                    for r in 0..rows {
                        for (t, s) in gb.row_mut(0).iter_mut().zip(g.row(r)) {
                            *t += s;
                        }
                    }
                });
                acc(x, &mut |gx| {
                    for r in 0..rows {
                        let gr = g.row(r);
                        let t = gx.row_mut(r);
                        for o in 0..out {
                            for i in 0..inp {
                                t[i] += gr[o] * wv[o * inp + i];
                            }
                        }
                    }
                });
            }
            Op::Sigmoid(x) => self.unary_back(x, &node.value, g, &mut acc, |_, y| y * (1.0 - y)),
            Op::Tanh(x) => self.unary_back(x, &node.value, g, &mut acc, |_, y| 1.0 - y * y),
            Op::Atan(x) => self.unary_back(x, &node.value, g, &mut acc, |x, _| 1.0 / (1.0 + x * x)),
            Op::Scale(x, k) => self.unary_back(x, &node.value, g, &mut acc, |_, _| k),
            Op::Add(a, b) => {
                for id in [a, b] {
                    acc(id, &mut |ga| reduce_into(ga, rows, |r, c| g.get(r, c)));
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(a), self.value(b));
                acc(a, &mut |ga| {
                    reduce_into(ga, rows, |r, c| g.get(r, c) * bv.get(bidx(bv.rows(), r), c))
                });
                acc(b, &mut |gb| {
                    reduce_into(gb, rows, |r, c| g.get(r, c) * av.get(bidx(av.rows(), r), c))
                });
            }
            Op::Outer(u, v) => {
                let (uv, vv) = (self.value(u), self.value(v));
                let n = vv.cols();
                acc(u, &mut |gu| {
                    reduce_into(gu, rows, |r, i| {
                        let vr = vv.row(bidx(vv.rows(), r));
                        (0..n).map(|j| g.get(r, i * n + j) * vr[j]).sum()
                    })
                });
                acc(v, &mut |gv| {
                    reduce_into(gv, rows, |r, j| {
                        let ur = uv.row(bidx(uv.rows(), r));
                        ur.iter().enumerate().map(|(i, ui)| g.get(r, i * n + j) * ui).sum()
                    })
                });
            }
            Op::Concat(a, b) => {
                let split = self.value(a).cols();
                acc(a, &mut |ga| reduce_into(ga, rows, |r, c| g.get(r, c)));
                acc(b, &mut |gb| reduce_into(gb, rows, |r, c| g.get(r, split + c)));
            }
            Op::Quantum { program, angles } => {
                let av = self.value(angles);
                let mut ga_local = Matrix::zeros(rows, av.cols());
                for r in 0..rows {
                    let jac = adjoint_expval_grad(program, av.row(bidx(av.rows(), r)))?.jacobian;
                    let gr = g.row(r);
                    let out = ga_local.row_mut(r);
                    for (k, gk) in gr.iter().enumerate() {
                        for (o, j) in out.iter_mut().zip(jac.row(k)) {
                            *o += gk * j;
                        }
                    }
                }
                acc(angles, &mut |ga| reduce_into(ga, rows, |r, c| ga_local.get(r, c)));
            }
            Op::Mse { pred, target } => {
                let (pv, tv) = (self.value(pred), self.value(target));
                let scale = 2.0 * g.get(0, 0) / pv.as_slice().len().max(1) as f64;
                acc(pred, &mut |gp| {
                    for ((o, p), t) in gp.as_mut_slice().iter_mut().zip(pv.as_slice()).zip(tv.as_slice()) {
                        *o += scale * (p - t);
                    }
                });
                acc(target, &mut |gt| {
                    for ((o, p), t) in gt.as_mut_slice().iter_mut().zip(pv.as_slice()).zip(tv.as_slice()) {
                        *o -= scale * (p - t);
                    }
                });
            }
        }
        Ok(())
    }

    fn unary_back(
        &self,
        x: NodeId,
        y: &Matrix,
        g: &Matrix,
        acc: &mut impl FnMut(NodeId, &mut dyn FnMut(&mut Matrix)),
        deriv: impl Fn(f64, f64) -> f64,
    ) {
        let xv = self.value(x);
        acc(x, &mut |gx| {
            for (((o, gi), xi), yi) in gx
                .as_mut_slice()
                .iter_mut()
                .zip(g.as_slice())
                .zip(xv.as_slice())
                .zip(y.as_slice())
            {
                *o += gi * deriv(*xi, *yi);
            }
        });
    }
}

/// Adds `f(r, c)` for every output row `r` into `target`, summing over the
/// batch when `target` is a broadcast single row.
fn reduce_into(target: &mut Matrix, rows: usize, f: impl Fn(usize, usize) -> f64) {
    let cols = target.cols();
    let trows = target.rows();
    for r in 0..rows {
        let t = target.row_mut(bidx(trows, r));
        for (c, tc) in t.iter_mut().enumerate().take(cols) {
            *tc += f(r, c);
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Adjoints of every node reached from the loss.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn wrt(&self, id: NodeId) -> Option<&Matrix> {
        self.grads.get(id.0).and_then(Option::as_ref)
    }

    /// Concatenates the gradients of `leaves`; unreached leaves contribute
    /// zeros of `sizes[i]`.
    pub fn flatten(&self, leaves: &[NodeId], sizes: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(sizes.iter().sum());
        for (id, &n) in leaves.iter().zip(sizes) {
            match self.wrt(*id) {
                Some(g) => out.extend_from_slice(g.as_slice()),
                None => out.extend(core::iter::repeat_n(0.0, n)),
            }
        }
        out
    }
}
