//! Reverse-mode autodiff over a dynamically recorded tape of tensor ops.
//!
//! A [`Tape`] is built per sequence: leaves are constants or parameters
//! borrowed from a [`ParamStore`], every op appends one node, and
//! [`Tape::backward`] walks the nodes in reverse accumulating gradients.

use std::collections::HashMap;

use super::kernels::{self, LstmCache};
use crate::error::{Error, Result};
use crate::tensor::{ParamId, ParamStore, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

enum Value {
    Owned(Vec<f64>),
    Param(ParamId),
}

enum Op {
    Leaf,
    Param,
    Linear { x: Var, w: Var, b: Option<Var> },
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    Exp(Var),
    Sum(Vec<Var>),
    Concat(Vec<Var>),
    ConcatCols(Var, Var),
    Slice { x: Var, lo: usize },
    Softmax(Var),
    LogSoftmaxPick { x: Var, target: usize, probs: Vec<f64> },
    BceWithLogits { x: Var, targets: Vec<f64> },
    Maxout { x: Var, arg: Vec<u8> },
    MaxPool { x: Var, arg: Vec<usize> },
    LstmSeq(Box<LstmSeqOp>),
    LstmStep(Box<LstmStepOp>),
    Embed { table: Var, ids: Vec<usize> },
    AttnEnergy { hproj: Var, sproj: Var, v: Var, lo: usize, hi: usize },
    WeightedRows { alpha: Var, h: Var, lo: usize },
}

struct LstmSeqOp {
    x: Var,
    wx: Var,
    wh: Var,
    b: Var,
    reverse: bool,
    cs: Vec<Vec<f64>>,
    caches: Vec<LstmCache>,
}

struct LstmStepOp {
    x: Var,
    hc: Var,
    wx: Var,
    wh: Var,
    b: Var,
    cache: LstmCache,
}

struct Node {
    shape: Vec<usize>,
    value: Value,
    op: Op,
}

pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_vars: HashMap<ParamId, Var>,
}

/// Gradients produced by [`Tape::backward`].
pub struct Gradients {
    nodes: Vec<Option<Vec<f64>>>,
    params: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient w.r.t. a tape node; `None` if the node does not influence the output.
    pub fn wrt(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].as_deref()
    }

    pub fn param(&self, id: ParamId) -> Option<&[f64]> {
        self.params.get(id.0).and_then(|g| g.as_deref())
    }

    /// Moves parameter gradients out, indexed by `ParamId`.
    pub fn into_param_grads(self) -> Vec<Option<Vec<f64>>> {
        self.params
    }
}

fn check_len(op: &'static str, a: &[usize], b: &[usize]) -> Result<()> {
    if a != b {
        return Err(Error::shape(op, a, b));
    }
    Ok(())
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

fn last_dim(shape: &[usize]) -> usize {
    *shape.last().expect("non-empty shape")
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Tape { params, nodes: Vec::new(), param_vars: HashMap::new() }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &[f64] {
        match &self.nodes[v.0].value {
            Value::Owned(d) => d,
            Value::Param(id) => self.params.value(*id),
        }
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[0]
    }

    pub fn tensor(&self, v: Var) -> Tensor {
        Tensor::new(self.shape(v).to_vec(), self.value(v).to_vec()).expect("tape nodes are well-formed")
    }

    fn push(&mut self, shape: Vec<usize>, data: Vec<f64>, op: Op) -> Var {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.nodes.push(Node { shape, value: Value::Owned(data), op });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        let shape = t.shape().to_vec();
        self.push(shape, t.into_data(), Op::Leaf)
    }

    pub fn vector(&mut self, data: Vec<f64>) -> Var {
        self.push(vec![data.len()], data, Op::Leaf)
    }

    /// Leaf for a parameter; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.param_vars.get(&id) {
            return v;
        }
        self.nodes.push(Node { shape: self.params.shape(id).to_vec(), value: Value::Param(id), op: Op::Param });
        let v = Var(self.nodes.len() - 1);
        self.param_vars.insert(id, v);
        v
    }

    /// `x W + b` over the last dimension of `x`.
    pub fn linear(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        let ws = self.shape(w).to_vec();
        if ws.len() != 2 || last_dim(&xs) != ws[0] {
            return Err(Error::shape("linear", &xs, &ws));
        }
        let n_out = ws[1];
        if let Some(b) = b {
            check_len("linear bias", self.shape(b), &[n_out])?;
        }
        let rows = self.value(x).len() / ws[0];
        let out = kernels::affine(self.value(x), rows, self.value(w), b.map(|b| self.value(b)), n_out);
        let mut shape = xs;
        *shape.last_mut().unwrap() = n_out;
        Ok(self.push(shape, out, Op::Linear { x, w, b }))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        check_len("add", self.shape(a), self.shape(b))?;
        let out = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
        Ok(self.push(self.shape(a).to_vec(), out, Op::Add(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        check_len("mul", self.shape(a), self.shape(b))?;
        let out = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).collect();
        Ok(self.push(self.shape(a).to_vec(), out, Op::Mul(a, b)))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let out = self.value(a).iter().map(|x| x * k).collect();
        self.push(self.shape(a).to_vec(), out, Op::Scale(a, k))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let out = self.value(x).iter().map(|v| v.tanh()).collect();
        self.push(self.shape(x).to_vec(), out, Op::Tanh(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let out = self.value(x).iter().map(|&v| kernels::sigmoid(v)).collect();
        self.push(self.shape(x).to_vec(), out, Op::Sigmoid(x))
    }

    pub fn exp(&mut self, x: Var) -> Var {
        let out = self.value(x).iter().map(|v| v.exp()).collect();
        self.push(self.shape(x).to_vec(), out, Op::Exp(x))
    }

    /// Elementwise sum of same-shaped nodes.
    pub fn sum(&mut self, xs: &[Var]) -> Result<Var> {
        let first = *xs.first().ok_or_else(|| Error::shape("sum", &[], &[]))?;
        let shape = self.shape(first).to_vec();
        let mut out = vec![0.0; self.value(first).len()];
        for &x in xs {
            check_len("sum", self.shape(x), &shape)?;
            add_into(&mut out, self.value(x));
        }
        Ok(self.push(shape, out, Op::Sum(xs.to_vec())))
    }

    /// Sum of all elements of `x` as a scalar.
    pub fn sum_all(&mut self, x: Var) -> Var {
        let total: f64 = self.value(x).iter().sum();
        self.push(vec![1], vec![total], Op::Sum(vec![x]))
    }

    /// Concatenation of 1-D nodes.
    pub fn concat(&mut self, xs: &[Var]) -> Result<Var> {
        let mut out = Vec::new();
        for &x in xs {
            if self.shape(x).len() != 1 {
                return Err(Error::shape("concat", self.shape(x), &[]));
            }
            out.extend_from_slice(self.value(x));
        }
        let n = out.len();
        Ok(self.push(vec![n], out, Op::Concat(xs.to_vec())))
    }

    /// Row-wise concatenation of `a[n, p]` and `b[n, q]` into `[n, p + q]`.
    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sa.len() != 2 || sb.len() != 2 || sa[0] != sb[0] {
            return Err(Error::shape("concat_cols", &sa, &sb));
        }
        let (n, p, q) = (sa[0], sa[1], sb[1]);
        let mut out = Vec::with_capacity(n * (p + q));
        for r in 0..n {
            out.extend_from_slice(&self.value(a)[r * p..(r + 1) * p]);
            out.extend_from_slice(&self.value(b)[r * q..(r + 1) * q]);
        }
        Ok(self.push(vec![n, p + q], out, Op::ConcatCols(a, b)))
    }

    /// `x[lo..hi]` of a 1-D node.
    pub fn slice(&mut self, x: Var, lo: usize, hi: usize) -> Result<Var> {
        let s = self.shape(x);
        if s.len() != 1 || lo >= hi || hi > s[0] {
            return Err(Error::shape("slice", s, &[lo, hi]));
        }
        let out = self.value(x)[lo..hi].to_vec();
        Ok(self.push(vec![hi - lo], out, Op::Slice { x, lo }))
    }

    /// Softmax of a 1-D node, optionally restricted to positions where `mask` is true.
    pub fn softmax(&mut self, x: Var, mask: Option<&[bool]>) -> Result<Var> {
        let s = self.shape(x).to_vec();
        if s.len() != 1 {
            return Err(Error::shape("softmax", &s, &[]));
        }
        if let Some(m) = mask {
            check_len("softmax mask", &s, &[m.len()])?;
        }
        let out = kernels::masked_softmax(self.value(x), mask).ok_or(Error::InvalidMask)?;
        Ok(self.push(s, out, Op::Softmax(x)))
    }

    /// `-log softmax(x)[target]` as a scalar.
    pub fn nll_of_logits(&mut self, x: Var, target: usize) -> Result<Var> {
        let n = self.value(x).len();
        if target >= n {
            return Err(Error::LabelOutOfRange { label: target, vocab: n });
        }
        let logp = kernels::log_softmax(self.value(x));
        let probs = logp.iter().map(|v| v.exp()).collect();
        let loss = -logp[target];
        Ok(self.push(vec![1], vec![loss], Op::LogSoftmaxPick { x, target, probs }))
    }

    /// Summed binary cross-entropy of `sigmoid(x)` against `targets`.
    pub fn bce_with_logits(&mut self, x: Var, targets: &[f64]) -> Result<Var> {
        let z = self.value(x);
        check_len("bce_with_logits", &[z.len()], &[targets.len()])?;
        let loss = z
            .iter()
            .zip(targets)
            .map(|(&z, &y)| -(y * kernels::log_sigmoid(z) + (1.0 - y) * kernels::log_one_minus_sigmoid(z)))
            .sum();
        Ok(self.push(vec![1], vec![loss], Op::BceWithLogits { x, targets: targets.to_vec() }))
    }

    /// Pairwise max over the last dimension (pool size 2).
    pub fn maxout(&mut self, x: Var) -> Result<Var> {
        let s = self.shape(x).to_vec();
        let last = last_dim(&s);
        if !last.is_multiple_of(2) {
            return Err(Error::OddDimension(last));
        }
        let (out, arg) = kernels::maxout(self.value(x));
        let mut shape = s;
        *shape.last_mut().unwrap() = last / 2;
        Ok(self.push(shape, out, Op::Maxout { x, arg }))
    }

    /// Max-pooling over groups of `k` rows of `x[T, d]`, dropping the remainder.
    pub fn max_pool_time(&mut self, x: Var, k: usize) -> Result<Var> {
        let s = self.shape(x).to_vec();
        if s.len() != 2 || k == 0 || s[0] < k {
            return Err(Error::TooShortInput { frames: s[0], required: k });
        }
        let (out, arg) = kernels::max_pool_rows(self.value(x), s[0], s[1], k);
        Ok(self.push(vec![s[0] / k, s[1]], out, Op::MaxPool { x, arg }))
    }

    fn check_lstm(&self, x_dim: usize, wx: Var, wh: Var, b: Var) -> Result<usize> {
        let (sx, sh, sb) = (self.shape(wx), self.shape(wh), self.shape(b));
        if sh.len() != 2 || sh[1] != 4 * sh[0] {
            return Err(Error::shape("lstm recurrent weight", sh, &[]));
        }
        let d = sh[0];
        check_len("lstm input weight", sx, &[x_dim, 4 * d])?;
        check_len("lstm bias", sb, &[4 * d])?;
        Ok(d)
    }

    /// Unidirectional LSTM over the rows of `x[T, in]` from a zero state; output `[T, d]`.
    pub fn lstm_sequence(&mut self, x: Var, wx: Var, wh: Var, b: Var, reverse: bool) -> Result<Var> {
        let s = self.shape(x).to_vec();
        if s.len() != 2 {
            return Err(Error::shape("lstm_sequence", &s, &[]));
        }
        let d = self.check_lstm(s[1], wx, wh, b)?;
        let (hs, cs, caches) =
            kernels::lstm_sequence(self.value(x), s[0], self.value(wx), self.value(wh), self.value(b), d, reverse);
        Ok(self.push(vec![s[0], d], hs, Op::LstmSeq(Box::new(LstmSeqOp { x, wx, wh, b, reverse, cs, caches }))))
    }

    /// One LSTM step. `hc` is the state `[h; c]` of size `2d`; returns the new `[h'; c']`.
    pub fn lstm_step(&mut self, x: Var, hc: Var, wx: Var, wh: Var, b: Var) -> Result<Var> {
        let sx = self.shape(x).to_vec();
        if sx.len() != 1 {
            return Err(Error::shape("lstm_step", &sx, &[]));
        }
        let d = self.check_lstm(sx[0], wx, wh, b)?;
        check_len("lstm_step state", self.shape(hc), &[2 * d])?;
        let mut xw = vec![0.0; 4 * d];
        kernels::affine_row(self.value(x), self.value(wx), Some(self.value(b)), &mut xw);
        let state = self.value(hc);
        let (h, c, cache) = kernels::lstm_cell(&xw, &state[..d], &state[d..], self.value(wh));
        let mut out = h;
        out.extend_from_slice(&c);
        Ok(self.push(vec![2 * d], out, Op::LstmStep(Box::new(LstmStepOp { x, hc, wx, wh, b, cache }))))
    }

    /// Rows of `table[n, d]` for `ids`; a single id gives a `[d]` vector, otherwise `[len, d]`.
    pub fn embed(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        self.embed_impl(table, ids, ids.len() != 1)
    }

    /// Rows of `table[n, d]` for `ids`, always shaped `[len, d]`.
    pub fn embed_rows(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        self.embed_impl(table, ids, true)
    }

    fn embed_impl(&mut self, table: Var, ids: &[usize], as_matrix: bool) -> Result<Var> {
        let s = self.shape(table).to_vec();
        if s.len() != 2 {
            return Err(Error::shape("embed", &s, &[]));
        }
        let (n, d) = (s[0], s[1]);
        let mut out = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            if id >= n {
                return Err(Error::LabelOutOfRange { label: id, vocab: n });
            }
            out.extend_from_slice(&self.value(table)[id * d..(id + 1) * d]);
        }
        let shape = if as_matrix { vec![ids.len(), d] } else { vec![d] };
        Ok(self.push(shape, out, Op::Embed { table, ids: ids.to_vec() }))
    }

    /// Energies `v . tanh(hproj[t] + sproj)` for rows `lo..hi` of `hproj[T, a]`.
    pub fn attention_energy(&mut self, hproj: Var, sproj: Var, v: Var, lo: usize, hi: usize) -> Result<Var> {
        let s = self.shape(hproj).to_vec();
        if s.len() != 2 || lo >= hi || hi > s[0] {
            return Err(Error::InvalidWindow { lo: lo + 1, hi, len: s[0] });
        }
        check_len("attention query", self.shape(sproj), &[s[1]])?;
        check_len("attention vector", self.shape(v), &[s[1], 1])?;
        let out = kernels::attention_energies(self.value(hproj), self.value(sproj), self.value(v), lo, hi);
        Ok(self.push(vec![hi - lo], out, Op::AttnEnergy { hproj, sproj, v, lo, hi }))
    }

    /// `sum_k alpha[k] h[lo + k]` for `h[T, D]`.
    pub fn weighted_rows(&mut self, alpha: Var, h: Var, lo: usize) -> Result<Var> {
        let s = self.shape(h).to_vec();
        let n = self.value(alpha).len();
        if s.len() != 2 || lo + n > s[0] {
            return Err(Error::shape("weighted_rows", &s, &[lo, n]));
        }
        let out = kernels::weighted_rows(self.value(alpha), self.value(h), s[1], lo);
        Ok(self.push(vec![s[1]], out, Op::WeightedRows { alpha, h, lo }))
    }

    /// Backpropagates from a scalar node.
    pub fn backward(&self, out: Var) -> Gradients {
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        let n_out = self.value(out).len();
        grads[out.0] = Some(vec![1.0; n_out]);

        fn acc(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut Vec<f64> {
            grads[v.0].get_or_insert_with(|| vec![0.0; len])
        }

        for i in (0..=out.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf | Op::Param => {}
                Op::Linear { x, w, b } => {
                    let (xv, wv) = (self.value(*x), self.value(*w));
                    let n_in = self.shape(*w)[0];
                    let n_out = self.shape(*w)[1];
                    let rows = xv.len() / n_in;
                    {
                        let dx = acc(&mut grads, *x, xv.len());
                        for r in 0..rows {
                            kernels::affine_row_backward_input(
                                &g[r * n_out..(r + 1) * n_out],
                                wv,
                                &mut dx[r * n_in..(r + 1) * n_in],
                            );
                        }
                    }
                    {
                        let dw = acc(&mut grads, *w, wv.len());
                        for r in 0..rows {
                            kernels::affine_row_backward_weight(
                                &xv[r * n_in..(r + 1) * n_in],
                                &g[r * n_out..(r + 1) * n_out],
                                dw,
                            );
                        }
                    }
                    if let Some(b) = b {
                        let db = acc(&mut grads, *b, n_out);
                        for r in 0..rows {
                            add_into(db, &g[r * n_out..(r + 1) * n_out]);
                        }
                    }
                }
                Op::Add(a, b) => {
                    add_into(acc(&mut grads, *a, g.len()), &g);
                    add_into(acc(&mut grads, *b, g.len()), &g);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let da: Vec<f64> = g.iter().zip(bv).map(|(g, y)| g * y).collect();
                    let db: Vec<f64> = g.iter().zip(av).map(|(g, x)| g * x).collect();
                    add_into(acc(&mut grads, *a, g.len()), &da);
                    add_into(acc(&mut grads, *b, g.len()), &db);
                }
                Op::Scale(a, k) => {
                    let d = acc(&mut grads, *a, g.len());
                    for (d, g) in d.iter_mut().zip(&g) {
                        *d += k * g;
                    }
                }
                Op::Tanh(x) => {
                    let y = self.value(Var(i));
                    let d = acc(&mut grads, *x, g.len());
                    for ((d, g), y) in d.iter_mut().zip(&g).zip(y) {
                        *d += g * (1.0 - y * y);
                    }
                }
                Op::Sigmoid(x) => {
                    let y = self.value(Var(i));
                    let d = acc(&mut grads, *x, g.len());
                    for ((d, g), y) in d.iter_mut().zip(&g).zip(y) {
                        *d += g * y * (1.0 - y);
                    }
                }
                Op::Exp(x) => {
                    let y = self.value(Var(i));
                    let d = acc(&mut grads, *x, g.len());
                    for ((d, g), y) in d.iter_mut().zip(&g).zip(y) {
                        *d += g * y;
                    }
                }
                Op::Sum(xs) => {
                    for x in xs {
                        if self.value(*x).len() == g.len() {
                            add_into(acc(&mut grads, *x, g.len()), &g);
                        } else {
                            // sum_all
                            let n = self.value(*x).len();
                            let d = acc(&mut grads, *x, n);
                            for d in d.iter_mut() {
                                *d += g[0];
                            }
                        }
                    }
                }
                Op::Concat(xs) => {
                    let mut off = 0;
                    for x in xs {
                        let n = self.value(*x).len();
                        add_into(acc(&mut grads, *x, n), &g[off..off + n]);
                        off += n;
                    }
                }
                Op::ConcatCols(a, b) => {
                    let (n, p) = (self.shape(*a)[0], self.shape(*a)[1]);
                    let q = self.shape(*b)[1];
                    {
                        let da = acc(&mut grads, *a, n * p);
                        for r in 0..n {
                            add_into(&mut da[r * p..(r + 1) * p], &g[r * (p + q)..r * (p + q) + p]);
                        }
                    }
                    let db = acc(&mut grads, *b, n * q);
                    for r in 0..n {
                        add_into(&mut db[r * q..(r + 1) * q], &g[r * (p + q) + p..(r + 1) * (p + q)]);
                    }
                }
                Op::Slice { x, lo } => {
                    let n = self.value(*x).len();
                    let d = acc(&mut grads, *x, n);
                    add_into(&mut d[*lo..*lo + g.len()], &g);
                }
                Op::Softmax(x) => {
                    let y = self.value(Var(i));
                    let dot: f64 = y.iter().zip(&g).map(|(y, g)| y * g).sum();
                    let d = acc(&mut grads, *x, g.len());
                    for ((d, g), y) in d.iter_mut().zip(&g).zip(y) {
                        *d += y * (g - dot);
                    }
                }
                Op::LogSoftmaxPick { x, target, probs } => {
                    let d = acc(&mut grads, *x, probs.len());
                    for (k, (d, p)) in d.iter_mut().zip(probs).enumerate() {
                        let indicator = if k == *target { 1.0 } else { 0.0 };
                        *d += g[0] * (p - indicator);
                    }
                }
                Op::BceWithLogits { x, targets } => {
                    let z = self.value(*x);
                    let dz: Vec<f64> = z.iter().zip(targets).map(|(&z, &y)| g[0] * (kernels::sigmoid(z) - y)).collect();
                    add_into(acc(&mut grads, *x, dz.len()), &dz);
                }
                Op::Maxout { x, arg } => {
                    let n = self.value(*x).len();
                    let d = acc(&mut grads, *x, n);
                    for (j, (&a, g)) in arg.iter().zip(&g).enumerate() {
                        d[2 * j + a as usize] += g;
                    }
                }
                Op::MaxPool { x, arg } => {
                    let cols = self.shape(*x)[1];
                    let n = self.value(*x).len();
                    let d = acc(&mut grads, *x, n);
                    for (k, (&src, g)) in arg.iter().zip(&g).enumerate() {
                        d[src * cols + k % cols] += g;
                    }
                }
                Op::LstmSeq(op) => self.backward_lstm_seq(op, Var(i), &g, &mut grads),
                Op::LstmStep(op) => self.backward_lstm_step(op, &g, &mut grads),
                Op::Embed { table, ids } => {
                    let d = self.shape(*table)[1];
                    let n = self.value(*table).len();
                    let dt = acc(&mut grads, *table, n);
                    for (k, &id) in ids.iter().enumerate() {
                        add_into(&mut dt[id * d..(id + 1) * d], &g[k * d..(k + 1) * d]);
                    }
                }
                Op::AttnEnergy { hproj, sproj, v, lo, hi } => {
                    let a = self.shape(*hproj)[1];
                    let (hp, sp, vv) = (self.value(*hproj), self.value(*sproj), self.value(*v));
                    let mut dv = vec![0.0; a];
                    let mut ds = vec![0.0; a];
                    let mut dh = vec![0.0; (hi - lo) * a];
                    for (k, t) in (*lo..*hi).enumerate() {
                        let row = &hp[t * a..(t + 1) * a];
                        for j in 0..a {
                            let u = (row[j] + sp[j]).tanh();
                            dv[j] += g[k] * u;
                            let dpre = g[k] * vv[j] * (1.0 - u * u);
                            dh[k * a + j] += dpre;
                            ds[j] += dpre;
                        }
                    }
                    add_into(acc(&mut grads, *v, a), &dv);
                    add_into(acc(&mut grads, *sproj, a), &ds);
                    let n = hp.len();
                    let dhp = acc(&mut grads, *hproj, n);
                    add_into(&mut dhp[lo * a..hi * a], &dh);
                }
                Op::WeightedRows { alpha, h, lo } => {
                    let dim = self.shape(*h)[1];
                    let (av, hv) = (self.value(*alpha), self.value(*h));
                    let da: Vec<f64> = (0..av.len())
                        .map(|k| {
                            let row = &hv[(lo + k) * dim..(lo + k + 1) * dim];
                            row.iter().zip(&g).map(|(x, g)| x * g).sum()
                        })
                        .collect();
                    add_into(acc(&mut grads, *alpha, av.len()), &da);
                    let n = hv.len();
                    let dh = acc(&mut grads, *h, n);
                    for (k, &a) in av.iter().enumerate() {
                        let row = &mut dh[(lo + k) * dim..(lo + k + 1) * dim];
                        for (d, g) in row.iter_mut().zip(&g) {
                            *d += a * g;
                        }
                    }
                }
            }
            grads[i] = Some(g);
        }

        let mut params: Vec<Option<Vec<f64>>> = (0..self.params.len()).map(|_| None).collect();
        for (&id, &v) in &self.param_vars {
            params[id.0] = grads[v.0].clone();
        }
        Gradients { nodes: grads, params }
    }

    fn backward_lstm_seq(&self, op: &LstmSeqOp, out: Var, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let steps = self.shape(op.x)[0];
        let n_in = self.shape(op.x)[1];
        let d = self.shape(op.wh)[0];
        let (xv, wxv, whv) = (self.value(op.x), self.value(op.wx), self.value(op.wh));
        let hs = self.value(out);
        let mut dx = vec![0.0; steps * n_in];
        let mut dwx = vec![0.0; wxv.len()];
        let mut dwh = vec![0.0; whv.len()];
        let mut db = vec![0.0; 4 * d];
        let mut dh_carry = vec![0.0; d];
        let mut dc_carry = vec![0.0; d];
        let zeros = vec![0.0; d];
        for k in (0..steps).rev() {
            let t = if op.reverse { steps - 1 - k } else { k };
            let prev = if k == 0 {
                None
            } else if op.reverse {
                Some(t + 1)
            } else {
                Some(t - 1)
            };
            let mut dh = g[t * d..(t + 1) * d].to_vec();
            add_into(&mut dh, &dh_carry);
            let c_prev = prev.map_or(&zeros[..], |p| &op.cs[p][..]);
            let h_prev = prev.map_or(&zeros[..], |p| &hs[p * d..(p + 1) * d]);
            let (dz, dc_prev) = kernels::lstm_cell_backward(&dh, &dc_carry, c_prev, &op.caches[t]);
            kernels::affine_row_backward_weight(&xv[t * n_in..(t + 1) * n_in], &dz, &mut dwx);
            kernels::affine_row_backward_weight(h_prev, &dz, &mut dwh);
            add_into(&mut db, &dz);
            kernels::affine_row_backward_input(&dz, wxv, &mut dx[t * n_in..(t + 1) * n_in]);
            dh_carry.fill(0.0);
            kernels::affine_row_backward_input(&dz, whv, &mut dh_carry);
            dc_carry = dc_prev;
        }
        add_into(grads[op.x.0].get_or_insert_with(|| vec![0.0; dx.len()]), &dx);
        add_into(grads[op.wx.0].get_or_insert_with(|| vec![0.0; dwx.len()]), &dwx);
        add_into(grads[op.wh.0].get_or_insert_with(|| vec![0.0; dwh.len()]), &dwh);
        add_into(grads[op.b.0].get_or_insert_with(|| vec![0.0; db.len()]), &db);
    }

    fn backward_lstm_step(&self, op: &LstmStepOp, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let d = self.shape(op.wh)[0];
        let (xv, hcv) = (self.value(op.x), self.value(op.hc));
        let (wxv, whv) = (self.value(op.wx), self.value(op.wh));
        let (dz, dc_prev) = kernels::lstm_cell_backward(&g[..d], &g[d..], &hcv[d..], &op.cache);
        let mut dx = vec![0.0; xv.len()];
        kernels::affine_row_backward_input(&dz, wxv, &mut dx);
        let mut dhc = vec![0.0; 2 * d];
        kernels::affine_row_backward_input(&dz, whv, &mut dhc[..d]);
        dhc[d..].copy_from_slice(&dc_prev);
        let mut dwx = vec![0.0; wxv.len()];
        kernels::affine_row_backward_weight(xv, &dz, &mut dwx);
        let mut dwh = vec![0.0; whv.len()];
        kernels::affine_row_backward_weight(&hcv[..d], &dz, &mut dwh);
        add_into(grads[op.x.0].get_or_insert_with(|| vec![0.0; dx.len()]), &dx);
        add_into(grads[op.hc.0].get_or_insert_with(|| vec![0.0; 2 * d]), &dhc);
        add_into(grads[op.wx.0].get_or_insert_with(|| vec![0.0; dwx.len()]), &dwx);
        add_into(grads[op.wh.0].get_or_insert_with(|| vec![0.0; dwh.len()]), &dwh);
        add_into(grads[op.b.0].get_or_insert_with(|| vec![0.0; dz.len()]), &dz);
    }
}
