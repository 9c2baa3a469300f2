use std::sync::Arc;

use super::sparse::SparseMatrix;
use super::tensor::{gemm, Layout, Tensor};
use crate::error::{dim_err, param_err, Error, Result};

/// Lower clamp applied before every logarithm.
pub const LOG_EPS: f64 = 1e-12;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

/// How the right operand of a binary elementwise op is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bcast {
    Same,
    /// `1 x C` operand repeated over every row.
    Row,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    SpMM(Arc<SparseMatrix>, Var),
    Add(Var, Var, Bcast),
    Sub(Var, Var, Bcast),
    Hadamard(Var, Var, Bcast),
    Scale(Var, f64),
    Relu(Var),
    Elu(Var),
    LeakyRelu(Var, f64),
    Log(Var),
    L1Norm(Var),
    ConcatCols(Vec<Var>),
    MeanRows(Var),
    Sum(Var),
    Transpose(Var),
    SelectRows(Var, Arc<[usize]>),
    Softmax(Var, f64),
    NormalizeRows(Var),
    EntropyRows(Var),
    Kl(Var, Var),
    CrossEntropy { logits: Var, rows: Vec<(usize, usize)>, probs: Tensor },
    HeadDot { h: Var, a: Var, heads: usize },
    GraphAttention { h: Var, s: Var, t: Var, structure: Arc<SparseMatrix>, heads: usize, slope: f64, alpha: Vec<f64> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Record of the operations of one forward pass.
///
/// Nodes are appended in execution order, so the node list is already a
/// topological order; [`Tape::backward`] walks it in reverse and consumes
/// the record.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`], keyed by [`Var`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }

    /// Number of nodes that received a gradient.
    pub fn len(&self) -> usize {
        self.grads.iter().filter(|g| g.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn same_shape(a: &Tensor, b: &Tensor, op: &str) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(dim_err!("{}: shapes {:?} and {:?} differ", op, a.shape(), b.shape()));
    }
    Ok(())
}

fn check_stochastic_domain(t: &Tensor, op: &str) -> Result<()> {
    if t.data().iter().any(|&v| v < 0.0) {
        return Err(Error::Domain(format!("{}: negative probability entry", op)));
    }
    Ok(())
}

fn lrelu(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

fn lrelu_grad(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        slope
    } else {
        0.0
    }
}

fn xlogx_grad(p: f64) -> f64 {
    p.max(LOG_EPS).ln() + 1.0
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

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool, name: &str) -> Result<Var> {
        value.check_finite(name)?;
        self.nodes.push(Node { value, op, requires_grad });
        Ok(Var(self.nodes.len() - 1))
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Trainable leaf.
    pub fn param(&mut self, t: Tensor) -> Result<Var> {
        self.push(t, Op::Leaf, true, "param")
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, t: Tensor) -> Result<Var> {
        self.push(t, Op::Leaf, false, "constant")
    }

    /// Value-only copy of `v`, cut from the record.
    pub fn detach(&mut self, v: Var) -> Var {
        let t = self.nodes[v.0].value.clone();
        self.nodes.push(Node { value: t, op: Op::Leaf, requires_grad: false });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.rg(v)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let out = av.matmul(bv)?;
        let rg = self.rg(a) || self.rg(b);
        self.push(out, Op::MatMul(a, b), rg, "matmul")
    }

    /// `a * b` with a constant sparse operator; gradient flows to `b` only.
    pub fn spmm(&mut self, a: &Arc<SparseMatrix>, b: Var) -> Result<Var> {
        a.check_finite()?;
        let out = a.spmm(self.value(b))?;
        let rg = self.rg(b);
        self.push(out, Op::SpMM(Arc::clone(a), b), rg, "spmm")
    }

    fn bcast(&self, a: Var, b: Var, op: &str) -> Result<Bcast> {
        let (ad, bd) = (self.value(a).dims(), self.value(b).dims());
        if ad == bd {
            Ok(Bcast::Same)
        } else if bd.0 == 1 && bd.1 == ad.1 {
            Ok(Bcast::Row)
        } else {
            Err(dim_err!("{}: cannot combine {:?} with {:?}", op, ad, bd))
        }
    }

    fn binary(&mut self, a: Var, b: Var, name: &str, f: impl Fn(f64, f64) -> f64) -> Result<(Tensor, Bcast)> {
        let mode = self.bcast(a, b, name)?;
        let (av, bv) = (self.value(a), self.value(b));
        let cols = av.cols();
        let mut out = av.clone();
        match mode {
            Bcast::Same => {
                for (o, &y) in out.data_mut().iter_mut().zip(bv.data()) {
                    *o = f(*o, y);
                }
            }
            Bcast::Row => {
                let brow = bv.data();
                for (k, o) in out.data_mut().iter_mut().enumerate() {
                    *o = f(*o, brow[k % cols]);
                }
            }
        }
        Ok((out, mode))
    }

    /// Elementwise sum; `b` may be a `1 x C` row broadcast over `a`'s rows.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (out, mode) = self.binary(a, b, "add", |x, y| x + y)?;
        let rg = self.rg(a) || self.rg(b);
        self.push(out, Op::Add(a, b, mode), rg, "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (out, mode) = self.binary(a, b, "sub", |x, y| x - y)?;
        let rg = self.rg(a) || self.rg(b);
        self.push(out, Op::Sub(a, b, mode), rg, "sub")
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        let (out, mode) = self.binary(a, b, "hadamard", |x, y| x * y)?;
        let rg = self.rg(a) || self.rg(b);
        self.push(out, Op::Hadamard(a, b, mode), rg, "hadamard")
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        let out = self.value(a).map(|x| x * factor);
        let rg = self.rg(a);
        self.push(out, Op::Scale(a, factor), rg, "scale")
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(|x| x.max(0.0));
        let rg = self.rg(a);
        self.push(out, Op::Relu(a), rg, "relu")
    }

    /// ELU with `alpha = 1`.
    pub fn elu(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(|x| if x > 0.0 { x } else { x.exp_m1() });
        let rg = self.rg(a);
        self.push(out, Op::Elu(a), rg, "elu")
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Result<Var> {
        let out = self.value(a).map(|x| lrelu(x, slope));
        let rg = self.rg(a);
        self.push(out, Op::LeakyRelu(a, slope), rg, "leaky_relu")
    }

    /// Natural log of `max(x, LOG_EPS)`; negative input is a domain error.
    pub fn log(&mut self, a: Var) -> Result<Var> {
        if self.value(a).data().iter().any(|&x| x < 0.0) {
            return Err(Error::Domain("log of a negative value".into()));
        }
        let out = self.value(a).map(|x| x.max(LOG_EPS).ln());
        let rg = self.rg(a);
        self.push(out, Op::Log(a), rg, "log")
    }

    /// Sum of absolute values, as a scalar.
    pub fn l1_norm(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).data().iter().map(|x| x.abs()).sum();
        let rg = self.rg(a);
        self.push(Tensor::scalar(s), Op::L1Norm(a), rg, "l1_norm")
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or_else(|| param_err!("concat_cols of nothing"))?;
        let rows = self.value(*first).rows();
        let mut total = 0;
        for &p in parts {
            let (r, c) = self.value(p).dims();
            if r != rows {
                return Err(dim_err!("concat_cols: {} rows vs {}", r, rows));
            }
            total += c;
        }
        let mut out = Tensor::zeros(rows, total);
        let mut off = 0;
        for &p in parts {
            let v = &self.nodes[p.0].value;
            let c = v.cols();
            for r in 0..rows {
                out.row_mut(r)[off..off + c].copy_from_slice(v.row(r));
            }
            off += c;
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        self.push(out, Op::ConcatCols(parts.to_vec()), rg, "concat_cols")
    }

    /// Column means: `N x C -> 1 x C`.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a);
        let (r, c) = v.dims();
        if r == 0 {
            return Err(param_err!("mean_rows of an empty matrix"));
        }
        let mut out = Tensor::zeros(1, c);
        for i in 0..r {
            for (o, &x) in out.data_mut().iter_mut().zip(v.row(i)) {
                *o += x;
            }
        }
        let out = out.map(|x| x / r as f64);
        let rg = self.rg(a);
        self.push(out, Op::MeanRows(a), rg, "mean_rows")
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).data().iter().sum();
        let rg = self.rg(a);
        self.push(Tensor::scalar(s), Op::Sum(a), rg, "sum")
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).transpose();
        let rg = self.rg(a);
        self.push(out, Op::Transpose(a), rg, "transpose")
    }

    /// Gather rows by index (indices may repeat).
    pub fn select_rows(&mut self, a: Var, indices: &Arc<[usize]>) -> Result<Var> {
        let out = self.value(a).select_rows(indices)?;
        let rg = self.rg(a);
        self.push(out, Op::SelectRows(a, Arc::clone(indices)), rg, "select_rows")
    }

    /// Row softmax of `z / temperature`, computed with row-max subtraction.
    pub fn softmax_rows(&mut self, z: Var, temperature: f64) -> Result<Var> {
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(param_err!("softmax temperature must be positive, got {}", temperature));
        }
        let mut out = self.value(z).clone();
        for r in 0..out.rows() {
            softmax_in_place(out.row_mut(r), temperature);
        }
        let rg = self.rg(z);
        self.push(out, Op::Softmax(z, temperature), rg, "softmax_rows")
    }

    /// Divide each row by its sum; every row sum must be positive.
    pub fn normalize_rows(&mut self, a: Var) -> Result<Var> {
        let mut out = self.value(a).clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            let s: f64 = row.iter().sum();
            if !(s > 0.0) {
                return Err(Error::Numeric(format!("normalize_rows: row {} sums to {}", r, s)));
            }
            row.iter_mut().for_each(|x| *x /= s);
        }
        let rg = self.rg(a);
        self.push(out, Op::NormalizeRows(a), rg, "normalize_rows")
    }

    /// Per-row negative entropy `sum_c p log p` (`N x 1`, values <= 0).
    pub fn entropy_rows(&mut self, p: Var) -> Result<Var> {
        let v = self.value(p);
        check_stochastic_domain(v, "entropy_rows")?;
        let (r, _) = v.dims();
        let mut out = Tensor::zeros(r, 1);
        for i in 0..r {
            let h: f64 = v.row(i).iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum();
            out.set(i, 0, h);
        }
        let rg = self.rg(p);
        self.push(out, Op::EntropyRows(p), rg, "entropy_rows")
    }

    /// Row-averaged `KL(p || q)`; `q` is clamped at [`LOG_EPS`] inside the log
    /// and `0 log 0` is taken as 0.
    pub fn kl_divergence(&mut self, p: Var, q: Var) -> Result<Var> {
        let (pv, qv) = (self.value(p), self.value(q));
        same_shape(pv, qv, "kl_divergence")?;
        check_stochastic_domain(pv, "kl_divergence")?;
        check_stochastic_domain(qv, "kl_divergence")?;
        let n = pv.rows();
        if n == 0 {
            return Err(param_err!("kl_divergence over zero rows"));
        }
        let mut total = 0.0;
        for (&a, &b) in pv.data().iter().zip(qv.data()) {
            if a > 0.0 {
                total += a * (a.ln() - b.max(LOG_EPS).ln());
            }
        }
        let rg = self.rg(p) || self.rg(q);
        self.push(Tensor::scalar(total / n as f64), Op::Kl(p, q), rg, "kl_divergence")
    }

    /// Mean over `mask` of `-log softmax(logits)[i, labels[i]]`.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize], mask: &[usize]) -> Result<Var> {
        if mask.is_empty() {
            return Err(param_err!("cross_entropy with an empty mask"));
        }
        let lv = self.value(logits);
        let (n, c) = lv.dims();
        let mut rows = Vec::with_capacity(mask.len());
        let mut probs = Tensor::zeros(mask.len(), c);
        let mut total = 0.0;
        for (k, &i) in mask.iter().enumerate() {
            if i >= n {
                return Err(dim_err!("mask index {} out of range for {} rows", i, n));
            }
            let y = *labels.get(i).ok_or_else(|| dim_err!("no label for row {}", i))?;
            if y >= c {
                return Err(Error::Domain(format!("label {} out of range for {} classes", y, c)));
            }
            let row = lv.row(i);
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|&z| (z - m).exp()).sum::<f64>().ln();
            total += lse - row[y];
            let prow = probs.row_mut(k);
            for (p, &z) in prow.iter_mut().zip(row) {
                *p = (z - lse).exp();
            }
            rows.push((i, y));
        }
        let rg = self.rg(logits);
        let loss = Tensor::scalar(total / mask.len() as f64);
        self.push(loss, Op::CrossEntropy { logits, rows, probs }, rg, "cross_entropy")
    }

    /// Per-head dot products: `h` is `N x (heads*F)`, `a` is `1 x (heads*F)`,
    /// result `N x heads`.
    pub fn head_dot(&mut self, h: Var, a: Var, heads: usize) -> Result<Var> {
        let (hv, av) = (self.value(h), self.value(a));
        let (n, width) = hv.dims();
        if heads == 0 || width % heads != 0 || av.dims() != (1, width) {
            return Err(dim_err!("head_dot: h {:?}, a {:?}, heads {}", hv.shape(), av.shape(), heads));
        }
        let f = width / heads;
        let mut out = Tensor::zeros(n, heads);
        for i in 0..n {
            let row = hv.row(i);
            for k in 0..heads {
                let s: f64 = row[k * f..(k + 1) * f].iter().zip(&av.data()[k * f..(k + 1) * f]).map(|(x, y)| x * y).sum();
                out.set(i, k, s);
            }
        }
        let rg = self.rg(h) || self.rg(a);
        self.push(out, Op::HeadDot { h, a, heads }, rg, "head_dot")
    }

    /// Multi-head attention aggregation over a fixed neighbourhood structure.
    ///
    /// For every stored entry `(i, j)` of `structure` and head `k`:
    /// `e = LeakyReLU(s[i,k] + t[j,k])`, `alpha` is the softmax of `e` over
    /// row `i`, and `out[i, head k] = sum_j alpha_ij h[j, head k]`.
    /// Structure values are ignored; every row must be non-empty.
    pub fn graph_attention(
        &mut self,
        h: Var,
        s: Var,
        t: Var,
        structure: &Arc<SparseMatrix>,
        heads: usize,
        slope: f64,
    ) -> Result<Var> {
        let (hv, sv, tv) = (self.value(h), self.value(s), self.value(t));
        let (n, width) = hv.dims();
        if heads == 0 || width % heads != 0 {
            return Err(dim_err!("graph_attention: width {} not divisible by {} heads", width, heads));
        }
        if sv.dims() != (n, heads) || tv.dims() != (n, heads) {
            return Err(dim_err!("graph_attention: score shapes must be {}x{}", n, heads));
        }
        if structure.n_rows() != n || structure.n_cols() != n {
            return Err(dim_err!("graph_attention: structure is {}x{}, features have {} rows", structure.n_rows(), structure.n_cols(), n));
        }
        let f = width / heads;
        let mut alpha = vec![0.0; structure.nnz() * heads];
        let mut out = Tensor::zeros(n, width);
        let rp = structure.row_ptr();
        for i in 0..n {
            let (cols, _) = structure.row(i);
            if cols.is_empty() {
                return Err(Error::Dataset(format!("graph_attention: node {} has no neighbours", i)));
            }
            let base = rp[i];
            for k in 0..heads {
                let si = sv.get(i, k);
                let mut m = f64::NEG_INFINITY;
                for (e, &j) in cols.iter().enumerate() {
                    let v = lrelu(si + tv.get(j, k), slope);
                    alpha[(base + e) * heads + k] = v;
                    m = m.max(v);
                }
                let mut z = 0.0;
                for e in 0..cols.len() {
                    let a = &mut alpha[(base + e) * heads + k];
                    *a = (*a - m).exp();
                    z += *a;
                }
                for (e, &j) in cols.iter().enumerate() {
                    let a = &mut alpha[(base + e) * heads + k];
                    *a /= z;
                    let w = *a;
                    let src = &hv.row(j)[k * f..(k + 1) * f];
                    let dst = &mut out.row_mut(i)[k * f..(k + 1) * f];
                    for (d, &x) in dst.iter_mut().zip(src) {
                        *d += w * x;
                    }
                }
            }
        }
        let rg = self.rg(h) || self.rg(s) || self.rg(t);
        let op = Op::GraphAttention { h, s, t, structure: Arc::clone(structure), heads, slope, alpha };
        self.push(out, op, rg, "graph_attention")
    }

    /// Attention coefficients of a `graph_attention` node, laid out as
    /// `[edge * heads + head]` in the structure's CSR order.
    pub fn attention_coefficients(&self, v: Var) -> Option<(&SparseMatrix, &[f64], usize)> {
        match &self.nodes[v.0].op {
            Op::GraphAttention { structure, alpha, heads, .. } => Some((structure, alpha, *heads)),
            _ => None,
        }
    }

    /// Reverse pass from a scalar `loss`; consumes the record.
    pub fn backward(self, loss: Var) -> Result<Gradients> {
        let Tape { nodes } = self;
        if nodes[loss.0].value.len() != 1 {
            return Err(param_err!("backward needs a scalar loss, got shape {:?}", nodes[loss.0].value.shape()));
        }
        let mut grads: Vec<Option<Tensor>> = (0..nodes.len()).map(|_| None).collect();
        if !nodes[loss.0].requires_grad {
            return Ok(Gradients { grads });
        }
        let shape = nodes[loss.0].value.dims();
        grads[loss.0] = Some(Tensor::full(shape.0, shape.1, 1.0));

        for idx in (0..=loss.0).rev() {
            let node = &nodes[idx];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let mut acc = |v: Var, t: Tensor| {
                if !nodes[v.0].requires_grad {
                    return;
                }
                match &mut grads[v.0] {
                    Some(existing) => {
                        for (e, x) in existing.data_mut().iter_mut().zip(t.data()) {
                            *e += x;
                        }
                    }
                    slot @ None => *slot = Some(t),
                }
            };
            let val = |v: Var| &nodes[v.0].value;
            let rg = |v: Var| nodes[v.0].requires_grad;
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (av, bv) = (val(*a), val(*b));
                    let (m, k) = av.dims();
                    let n = bv.cols();
                    if rg(*a) {
                        let mut ga = Tensor::zeros(m, k);
                        gemm(m, n, k, 1.0, g.data(), Layout::Normal, bv.data(), Layout::Transposed, 0.0, ga.data_mut());
                        acc(*a, ga);
                    }
                    if rg(*b) {
                        let mut gb = Tensor::zeros(k, n);
                        gemm(k, m, n, 1.0, av.data(), Layout::Transposed, g.data(), Layout::Normal, 0.0, gb.data_mut());
                        acc(*b, gb);
                    }
                }
                Op::SpMM(a, b) => {
                    let mut gb = Tensor::zeros(a.n_cols(), g.cols());
                    a.spmm_transpose_into(&g, &mut gb);
                    acc(*b, gb);
                }
                Op::Add(a, b, mode) | Op::Sub(a, b, mode) => {
                    let sign = if matches!(node.op, Op::Sub(..)) { -1.0 } else { 1.0 };
                    if rg(*b) {
                        let gb = reduce_like(&g, *mode).map(|x| sign * x);
                        acc(*b, gb);
                    }
                    acc(*a, g);
                }
                Op::Hadamard(a, b, mode) => {
                    let (av, bv) = (val(*a), val(*b));
                    if rg(*a) {
                        let mut ga = g.clone();
                        let cols = ga.cols();
                        for (k, x) in ga.data_mut().iter_mut().enumerate() {
                            *x *= match mode {
                                Bcast::Same => bv.data()[k],
                                Bcast::Row => bv.data()[k % cols],
                            };
                        }
                        acc(*a, ga);
                    }
                    if rg(*b) {
                        let mut prod = g.clone();
                        for (x, &y) in prod.data_mut().iter_mut().zip(av.data()) {
                            *x *= y;
                        }
                        acc(*b, reduce_like(&prod, *mode));
                    }
                }
                Op::Scale(a, f) => acc(*a, g.map(|x| x * f)),
                Op::Relu(a) => acc(*a, zip_map(&g, val(*a), |g, x| if x > 0.0 { g } else { 0.0 })),
                Op::Elu(a) => acc(*a, zip_map(&g, val(*a), |g, x| if x > 0.0 { g } else { g * x.exp() })),
                Op::LeakyRelu(a, slope) => acc(*a, zip_map(&g, val(*a), |g, x| g * lrelu_grad(x, *slope))),
                Op::Log(a) => acc(*a, zip_map(&g, val(*a), |g, x| if x >= LOG_EPS { g / x } else { 0.0 })),
                Op::L1Norm(a) => {
                    let s = g.data()[0];
                    acc(*a, val(*a).map(|x| if x > 0.0 { s } else if x < 0.0 { -s } else { 0.0 }));
                }
                Op::ConcatCols(parts) => {
                    let rows = g.rows();
                    let mut off = 0;
                    for &p in parts {
                        let c = val(p).cols();
                        if rg(p) {
                            let mut gp = Tensor::zeros(rows, c);
                            for r in 0..rows {
                                gp.row_mut(r).copy_from_slice(&g.row(r)[off..off + c]);
                            }
                            acc(p, gp);
                        }
                        off += c;
                    }
                }
                Op::MeanRows(a) => {
                    let (r, c) = val(*a).dims();
                    let mut ga = Tensor::zeros(r, c);
                    for i in 0..r {
                        for (x, &y) in ga.row_mut(i).iter_mut().zip(g.data()) {
                            *x = y / r as f64;
                        }
                    }
                    acc(*a, ga);
                }
                Op::Sum(a) => {
                    let (r, c) = val(*a).dims();
                    acc(*a, Tensor::full(r, c, g.data()[0]));
                }
                Op::Transpose(a) => acc(*a, g.transpose()),
                Op::SelectRows(a, idx) => {
                    let (r, c) = val(*a).dims();
                    let mut ga = Tensor::zeros(r, c);
                    for (k, &i) in idx.iter().enumerate() {
                        for (x, &y) in ga.row_mut(i).iter_mut().zip(g.row(k)) {
                            *x += y;
                        }
                    }
                    acc(*a, ga);
                }
                Op::Softmax(z, temp) => {
                    let y = &node.value;
                    let mut gz = Tensor::zeros(y.rows(), y.cols());
                    for r in 0..y.rows() {
                        let (yr, gr) = (y.row(r), g.row(r));
                        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for ((o, &yv), &gv) in gz.row_mut(r).iter_mut().zip(yr).zip(gr) {
                            *o = yv * (gv - dot) / temp;
                        }
                    }
                    acc(*z, gz);
                }
                Op::NormalizeRows(a) => {
                    let (y, x) = (&node.value, val(*a));
                    let mut ga = Tensor::zeros(y.rows(), y.cols());
                    for r in 0..y.rows() {
                        let s: f64 = x.row(r).iter().sum();
                        let dot: f64 = y.row(r).iter().zip(g.row(r)).map(|(a, b)| a * b).sum();
                        for (o, &gv) in ga.row_mut(r).iter_mut().zip(g.row(r)) {
                            *o = (gv - dot) / s;
                        }
                    }
                    acc(*a, ga);
                }
                Op::EntropyRows(p) => {
                    let pv = val(*p);
                    let mut gp = Tensor::zeros(pv.rows(), pv.cols());
                    for r in 0..pv.rows() {
                        let gr = g.get(r, 0);
                        for (o, &x) in gp.row_mut(r).iter_mut().zip(pv.row(r)) {
                            *o = gr * xlogx_grad(x);
                        }
                    }
                    acc(*p, gp);
                }
                Op::Kl(p, q) => {
                    let (pv, qv) = (val(*p), val(*q));
                    let scale = g.data()[0] / pv.rows() as f64;
                    if rg(*p) {
                        acc(*p, zip_map(pv, qv, |a, b| scale * (xlogx_grad(a) - b.max(LOG_EPS).ln())));
                    }
                    if rg(*q) {
                        acc(*q, zip_map(pv, qv, |a, b| if b >= LOG_EPS { -scale * a / b } else { 0.0 }));
                    }
                }
                Op::CrossEntropy { logits, rows, probs } => {
                    let (n, c) = val(*logits).dims();
                    let scale = g.data()[0] / rows.len() as f64;
                    let mut gl = Tensor::zeros(n, c);
                    for (k, &(i, y)) in rows.iter().enumerate() {
                        let dst = gl.row_mut(i);
                        for (o, &p) in dst.iter_mut().zip(probs.row(k)) {
                            *o += scale * p;
                        }
                        dst[y] -= scale;
                    }
                    acc(*logits, gl);
                }
                Op::HeadDot { h, a, heads } => {
                    let (hv, av) = (val(*h), val(*a));
                    let (n, width) = hv.dims();
                    let f = width / heads;
                    if rg(*h) {
                        let mut gh = Tensor::zeros(n, width);
                        for i in 0..n {
                            for k in 0..*heads {
                                let gi = g.get(i, k);
                                for c in k * f..(k + 1) * f {
                                    gh.set(i, c, gi * av.data()[c]);
                                }
                            }
                        }
                        acc(*h, gh);
                    }
                    if rg(*a) {
                        let mut ga = Tensor::zeros(1, width);
                        for i in 0..n {
                            let row = hv.row(i);
                            for k in 0..*heads {
                                let gi = g.get(i, k);
                                for c in k * f..(k + 1) * f {
                                    ga.data_mut()[c] += gi * row[c];
                                }
                            }
                        }
                        acc(*a, ga);
                    }
                }
                Op::GraphAttention { h, s, t, structure, heads, slope, alpha } => {
                    let (hv, sv, tv) = (val(*h), val(*s), val(*t));
                    let (n, width) = hv.dims();
                    let heads = *heads;
                    let f = width / heads;
                    let rp = structure.row_ptr();
                    let mut gh = Tensor::zeros(n, width);
                    let mut gs = Tensor::zeros(n, heads);
                    let mut gt = Tensor::zeros(n, heads);
                    let mut dalpha = Vec::new();
                    for i in 0..n {
                        let (cols, _) = structure.row(i);
                        let base = rp[i];
                        for k in 0..heads {
                            let gi = &g.row(i)[k * f..(k + 1) * f];
                            dalpha.clear();
                            let mut weighted = 0.0;
                            for (e, &j) in cols.iter().enumerate() {
                                let a = alpha[(base + e) * heads + k];
                                let hj = &hv.row(j)[k * f..(k + 1) * f];
                                let da: f64 = gi.iter().zip(hj).map(|(x, y)| x * y).sum();
                                dalpha.push(da);
                                weighted += a * da;
                                let dst = &mut gh.row_mut(j)[k * f..(k + 1) * f];
                                for (d, &x) in dst.iter_mut().zip(gi) {
                                    *d += a * x;
                                }
                            }
                            let si = sv.get(i, k);
                            for (e, &j) in cols.iter().enumerate() {
                                let a = alpha[(base + e) * heads + k];
                                let de = a * (dalpha[e] - weighted);
                                let du = de * lrelu_grad(si + tv.get(j, k), *slope);
                                gs.data_mut()[i * heads + k] += du;
                                gt.data_mut()[j * heads + k] += du;
                            }
                        }
                    }
                    acc(*h, gh);
                    acc(*s, gs);
                    acc(*t, gt);
                }
            }
        }
        Ok(Gradients { grads })
    }
}

/// Row softmax of `row / temperature` in place.
pub(crate) fn softmax_in_place(row: &mut [f64], temperature: f64) {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for x in row.iter_mut() {
        *x = ((*x - m) / temperature).exp();
        z += *x;
    }
    for x in row.iter_mut() {
        *x /= z;
    }
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let mut out = a.clone();
    for (x, &y) in out.data_mut().iter_mut().zip(b.data()) {
        *x = f(*x, y);
    }
    out
}

/// Sum a gradient down to the shape of a broadcast operand.
fn reduce_like(g: &Tensor, mode: Bcast) -> Tensor {
    match mode {
        Bcast::Same => g.clone(),
        Bcast::Row => {
            let (r, c) = g.dims();
            let mut out = Tensor::zeros(1, c);
            for i in 0..r {
                for (o, &x) in out.data_mut().iter_mut().zip(g.row(i)) {
                    *o += x;
                }
            }
            out
        }
    }
}
