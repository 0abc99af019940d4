use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;

use super::activation::{sigmoid, softmax_in_place, tanh};
use super::{matmul_into, ActivationKind, Real, Tensor};
use crate::error::{Error, Result};

enum Op<T> {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    AddBias(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Affine { x: usize, scale: T },
    Tanh(usize),
    Sigmoid(usize),
    Softmax { x: usize },
    Gather { table: usize, ids: Vec<usize> },
    ConcatCols(Vec<usize>),
    Column { x: usize, col: usize },
    ScaleRows { x: usize, scale: usize },
    Sum(usize),
    CrossEntropy { logits: usize, targets: Vec<Option<usize>>, probs: Vec<T> },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    tracked: bool,
    name: Option<String>,
}

/// Computation record. Every operation on a [`Var`] appends a node; nodes are
/// therefore in topological order by construction.
///
/// A graph is single-threaded (`!Sync`) and meant to live for one forward and
/// backward pass.
pub struct Graph<T: Real = f32> {
    nodes: RefCell<Vec<Node<T>>>,
}

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy)]
pub struct Var<'g, T: Real = f32> {
    graph: &'g Graph<T>,
    id: usize,
}

impl<T: Real> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: RefCell::new(Vec::new()) }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Untracked input. No gradient flows into it.
    pub fn constant(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push(value, Op::Leaf, false, None)
    }

    /// Tracked, anonymous leaf.
    pub fn variable(&self, value: Tensor<T>) -> Var<'_, T> {
        self.push(value, Op::Leaf, true, None)
    }

    /// Tracked leaf reported by name in [`Gradients::named`].
    pub fn param(&self, name: impl Into<String>, value: Tensor<T>) -> Var<'_, T> {
        self.push(value, Op::Leaf, true, Some(name.into()))
    }

    fn push(&self, value: Tensor<T>, op: Op<T>, tracked: bool, name: Option<String>) -> Var<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op, tracked, name });
        Var { graph: self, id: nodes.len() - 1 }
    }

    fn tracked(&self, ids: &[usize]) -> bool {
        let nodes = self.nodes.borrow();
        ids.iter().any(|&i| nodes[i].tracked)
    }

    fn with_value<R>(&self, id: usize, f: impl FnOnce(&Tensor<T>) -> R) -> R {
        f(&self.nodes.borrow()[id].value)
    }

    /// Concatenates rank-2 tensors with equal row counts along the column axis.
    pub fn concat_cols<'g>(&'g self, parts: &[Var<'g, T>]) -> Result<Var<'g, T>> {
        let nodes = self.nodes.borrow();
        let first = parts.first().ok_or_else(|| Error::EmptyInput("concat_cols of nothing".into()))?;
        let (rows, _) = nodes[first.id].value.dims2()?;
        let mut widths = Vec::with_capacity(parts.len());
        for p in parts {
            let (r, c) = nodes[p.id].value.dims2()?;
            if r != rows {
                return Err(Error::ShapeMismatch {
                    op: "concat_cols",
                    left: nodes[first.id].value.shape().to_vec(),
                    right: nodes[p.id].value.shape().to_vec(),
                });
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(rows * total);
        for i in 0..rows {
            for (p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&nodes[p.id].value.data()[i * w..(i + 1) * w]);
            }
        }
        drop(nodes);
        let ids: Vec<usize> = parts.iter().map(|p| p.id).collect();
        let tracked = self.tracked(&ids);
        Ok(self.push(Tensor::new([rows, total], out)?, Op::ConcatCols(ids), tracked, None))
    }

    /// Reverse-mode sweep from a scalar `loss`.
    ///
    /// Every named parameter gets a gradient of its own shape; parameters not
    /// on any path to `loss` get zeros.
    pub fn backward(&self, loss: Var<'_, T>) -> Result<Gradients<T>> {
        let nodes = self.nodes.borrow();
        let root = &nodes[loss.id];
        if root.value.len() != 1 {
            return Err(Error::NotScalar(root.value.shape().to_vec()));
        }
        if !root.tracked {
            return Err(Error::Untracked);
        }

        let mut grads: Vec<Option<Tensor<T>>> = (0..=loss.id).map(|_| None).collect();
        grads[loss.id] = Some(Tensor::full(root.value.shape().to_vec(), T::one()));
        let mut leaves: BTreeMap<usize, Tensor<T>> = BTreeMap::new();

        for id in (0..=loss.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            if !node.tracked {
                continue;
            }
            let val = |i: usize| &nodes[i].value;
            let wants = |i: usize| nodes[i].tracked;
            match &node.op {
                Op::Leaf => {
                    leaves.insert(id, g);
                }
                &Op::MatMul(a, b) => {
                    let (m, k) = val(a).dims2()?;
                    let (_, n) = val(b).dims2()?;
                    if wants(a) {
                        // dA = G · Bᵀ
                        let bd = val(b).data();
                        let mut da = vec![T::zero(); m * k];
                        for i in 0..m {
                            let g_row = &g.data()[i * n..(i + 1) * n];
                            for p in 0..k {
                                let b_row = &bd[p * n..(p + 1) * n];
                                da[i * k + p] = g_row.iter().zip(b_row).map(|(&x, &y)| x * y).sum();
                            }
                        }
                        accumulate(&mut grads, a, Tensor::new([m, k], da)?);
                    }
                    if wants(b) {
                        // dB = Aᵀ · G
                        let ad = val(a).data();
                        let mut db = vec![T::zero(); k * n];
                        for i in 0..m {
                            let g_row = &g.data()[i * n..(i + 1) * n];
                            for p in 0..k {
                                let a_ip = ad[i * k + p];
                                if a_ip == T::zero() {
                                    continue;
                                }
                                for (d, &gv) in db[p * n..(p + 1) * n].iter_mut().zip(g_row) {
                                    *d += a_ip * gv;
                                }
                            }
                        }
                        accumulate(&mut grads, b, Tensor::new([k, n], db)?);
                    }
                }
                &Op::Add(a, b) => {
                    if wants(a) {
                        accumulate(&mut grads, a, g.clone());
                    }
                    if wants(b) {
                        accumulate(&mut grads, b, g);
                    }
                }
                &Op::AddBias(x, b) => {
                    if wants(b) {
                        let n = val(b).len();
                        let mut db = vec![T::zero(); n];
                        for row in g.data().chunks(n) {
                            for (d, &v) in db.iter_mut().zip(row) {
                                *d += v;
                            }
                        }
                        accumulate(&mut grads, b, Tensor::new(val(b).shape().to_vec(), db)?);
                    }
                    if wants(x) {
                        accumulate(&mut grads, x, g);
                    }
                }
                &Op::Sub(a, b) => {
                    if wants(b) {
                        accumulate(&mut grads, b, g.map(|v| -v));
                    }
                    if wants(a) {
                        accumulate(&mut grads, a, g);
                    }
                }
                &Op::Mul(a, b) => {
                    if wants(a) {
                        accumulate(&mut grads, a, zip_map(&g, val(b), |gv, bv| gv * bv));
                    }
                    if wants(b) {
                        accumulate(&mut grads, b, zip_map(&g, val(a), |gv, av| gv * av));
                    }
                }
                &Op::Affine { x, scale } => {
                    accumulate(&mut grads, x, g.map(|v| v * scale));
                }
                &Op::Tanh(x) => {
                    let dx = zip_map(&g, &node.value, |gv, y| gv * (T::one() - y * y));
                    accumulate(&mut grads, x, dx);
                }
                &Op::Sigmoid(x) => {
                    let dx = zip_map(&g, &node.value, |gv, y| gv * y * (T::one() - y));
                    accumulate(&mut grads, x, dx);
                }
                &Op::Softmax { x } => {
                    let cols = *node.value.shape().last().unwrap_or(&1);
                    let mut dx = g.clone();
                    for (d_row, y_row) in dx.data_mut().chunks_mut(cols).zip(node.value.data().chunks(cols)) {
                        let dot: T = d_row.iter().zip(y_row).map(|(&a, &b)| a * b).sum();
                        for (d, &y) in d_row.iter_mut().zip(y_row) {
                            *d = y * (*d - dot);
                        }
                    }
                    accumulate(&mut grads, x, dx);
                }
                Op::Gather { table, ids } => {
                    let table = *table;
                    let mut dt = Tensor::zeros(val(table).shape().to_vec());
                    let d = *val(table).shape().last().unwrap_or(&1);
                    for (i, &row) in ids.iter().enumerate() {
                        let src = &g.data()[i * d..(i + 1) * d];
                        for (t, &s) in dt.data_mut()[row * d..(row + 1) * d].iter_mut().zip(src) {
                            *t += s;
                        }
                    }
                    accumulate(&mut grads, table, dt);
                }
                Op::ConcatCols(parts) => {
                    let (rows, total) = g.dims2()?;
                    let mut offset = 0;
                    for &p in parts {
                        let w = val(p).dims2()?.1;
                        if wants(p) {
                            let mut dp = Vec::with_capacity(rows * w);
                            for i in 0..rows {
                                dp.extend_from_slice(&g.data()[i * total + offset..i * total + offset + w]);
                            }
                            accumulate(&mut grads, p, Tensor::new([rows, w], dp)?);
                        }
                        offset += w;
                    }
                }
                &Op::Column { x, col } => {
                    let (rows, cols) = val(x).dims2()?;
                    let mut dx = Tensor::zeros([rows, cols]);
                    for i in 0..rows {
                        dx.data_mut()[i * cols + col] = g.data()[i];
                    }
                    accumulate(&mut grads, x, dx);
                }
                &Op::ScaleRows { x, scale } => {
                    let (rows, cols) = val(x).dims2()?;
                    let s = val(scale).data();
                    if wants(x) {
                        let mut dx = g.clone();
                        for (i, row) in dx.data_mut().chunks_mut(cols).enumerate() {
                            for v in row.iter_mut() {
                                *v *= s[i];
                            }
                        }
                        accumulate(&mut grads, x, dx);
                    }
                    if wants(scale) {
                        let xd = val(x).data();
                        let ds: Vec<T> = (0..rows)
                            .map(|i| {
                                let r = i * cols..(i + 1) * cols;
                                g.data()[r.clone()].iter().zip(&xd[r]).map(|(&a, &b)| a * b).sum()
                            })
                            .collect();
                        accumulate(&mut grads, scale, Tensor::new([rows, 1], ds)?);
                    }
                }
                &Op::Sum(x) => {
                    let gv = g.data()[0];
                    accumulate(&mut grads, x, Tensor::full(val(x).shape().to_vec(), gv));
                }
                Op::CrossEntropy { logits, targets, probs } => {
                    let logits = *logits;
                    let gv = g.data()[0];
                    let (_, v) = val(logits).dims2()?;
                    let mut dl = vec![T::zero(); probs.len()];
                    for (i, target) in targets.iter().enumerate() {
                        if let Some(t) = *target {
                            let r = i * v..(i + 1) * v;
                            for (d, &p) in dl[r].iter_mut().zip(&probs[i * v..(i + 1) * v]) {
                                *d = gv * p;
                            }
                            dl[i * v + t] -= gv;
                        }
                    }
                    accumulate(&mut grads, logits, Tensor::new(val(logits).shape().to_vec(), dl)?);
                }
            }
        }

        let mut named = BTreeMap::new();
        for (id, node) in nodes.iter().enumerate() {
            if let (Some(name), true) = (&node.name, node.tracked) {
                let g = leaves.get(&id).cloned().unwrap_or_else(|| Tensor::zeros(node.value.shape().to_vec()));
                named.insert(name.clone(), g);
            }
        }
        Ok(Gradients { leaves, named })
    }
}

fn accumulate<T: Real>(grads: &mut [Option<Tensor<T>>], id: usize, g: Tensor<T>) {
    match &mut grads[id] {
        Some(existing) => {
            for (e, v) in existing.data_mut().iter_mut().zip(g.data()) {
                *e += *v;
            }
        }
        slot @ None => *slot = Some(g),
    }
}

fn zip_map<T: Real>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor { shape: a.shape().to_vec(), data }
}

/// Result of [`Graph::backward`].
pub struct Gradients<T: Real = f32> {
    leaves: BTreeMap<usize, Tensor<T>>,
    named: BTreeMap<String, Tensor<T>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient with respect to a tracked leaf (zeros if it was unreachable).
    pub fn wrt(&self, var: &Var<'_, T>) -> Tensor<T> {
        self.leaves.get(&var.id).cloned().unwrap_or_else(|| Tensor::zeros(var.shape()))
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.named.get(name)
    }

    pub fn named(&self) -> &BTreeMap<String, Tensor<T>> {
        &self.named
    }

    pub fn into_named(self) -> BTreeMap<String, Tensor<T>> {
        self.named
    }
}

impl<'g, T: Real> fmt::Debug for Var<'g, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var#{}{:?}", self.id, self.shape())
    }
}

impl<'g, T: Real> Var<'g, T> {
    pub fn graph(&self) -> &'g Graph<T> {
        self.graph
    }

    pub fn value(&self) -> Tensor<T> {
        self.graph.with_value(self.id, Tensor::clone)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.graph.with_value(self.id, |t| t.shape().to_vec())
    }

    pub fn item(&self) -> Option<T> {
        self.graph.with_value(self.id, Tensor::item)
    }

    pub fn is_tracked(&self) -> bool {
        self.graph.nodes.borrow()[self.id].tracked
    }

    fn same_graph(&self, other: &Var<'g, T>) {
        assert!(std::ptr::eq(self.graph, other.graph), "vars belong to different graphs");
    }

    fn unary(&self, value: Tensor<T>, op: Op<T>) -> Var<'g, T> {
        let tracked = self.graph.tracked(&[self.id]);
        self.graph.push(value, op, tracked, None)
    }

    fn binary(&self, other: &Var<'g, T>, value: Tensor<T>, op: Op<T>) -> Var<'g, T> {
        let tracked = self.graph.tracked(&[self.id, other.id]);
        self.graph.push(value, op, tracked, None)
    }

    fn elementwise(&self, other: &Var<'g, T>, op_name: &'static str, f: impl Fn(T, T) -> T) -> Result<Tensor<T>> {
        self.same_graph(other);
        let nodes = self.graph.nodes.borrow();
        let (a, b) = (&nodes[self.id].value, &nodes[other.id].value);
        if a.shape() != b.shape() {
            return Err(Error::ShapeMismatch { op: op_name, left: a.shape().to_vec(), right: b.shape().to_vec() });
        }
        Ok(zip_map(a, b, f))
    }

    pub fn matmul(&self, other: &Var<'g, T>) -> Result<Var<'g, T>> {
        self.same_graph(other);
        let out = {
            let nodes = self.graph.nodes.borrow();
            let (a, b) = (&nodes[self.id].value, &nodes[other.id].value);
            let (m, k) = a.dims2()?;
            let (k2, n) = b.dims2()?;
            if k != k2 {
                return Err(Error::ShapeMismatch { op: "matmul", left: a.shape().to_vec(), right: b.shape().to_vec() });
            }
            let mut out = vec![T::zero(); m * n];
            matmul_into(a.data(), b.data(), &mut out, m, k, n);
            Tensor::new([m, n], out)?
        };
        Ok(self.binary(other, out, Op::MatMul(self.id, other.id)))
    }

    pub fn add(&self, other: &Var<'g, T>) -> Result<Var<'g, T>> {
        let out = self.elementwise(other, "add", |a, b| a + b)?;
        Ok(self.binary(other, out, Op::Add(self.id, other.id)))
    }

    pub fn sub(&self, other: &Var<'g, T>) -> Result<Var<'g, T>> {
        let out = self.elementwise(other, "sub", |a, b| a - b)?;
        Ok(self.binary(other, out, Op::Sub(self.id, other.id)))
    }

    pub fn mul(&self, other: &Var<'g, T>) -> Result<Var<'g, T>> {
        let out = self.elementwise(other, "mul", |a, b| a * b)?;
        Ok(self.binary(other, out, Op::Mul(self.id, other.id)))
    }

    /// Adds a bias vector to every row (broadcast over the last axis only).
    pub fn add_bias(&self, bias: &Var<'g, T>) -> Result<Var<'g, T>> {
        self.same_graph(bias);
        let out = {
            let nodes = self.graph.nodes.borrow();
            let (x, b) = (&nodes[self.id].value, &nodes[bias.id].value);
            let n = *x.shape().last().unwrap_or(&1);
            if b.len() != n || b.rank() != 1 {
                return Err(Error::ShapeMismatch {
                    op: "add_bias",
                    left: x.shape().to_vec(),
                    right: b.shape().to_vec(),
                });
            }
            let mut out = x.clone();
            for row in out.data_mut().chunks_mut(n) {
                for (o, &bv) in row.iter_mut().zip(b.data()) {
                    *o += bv;
                }
            }
            out
        };
        Ok(self.binary(bias, out, Op::AddBias(self.id, bias.id)))
    }

    /// `scale * x + shift`
    pub fn affine(&self, scale: T, shift: T) -> Var<'g, T> {
        let out = self.graph.with_value(self.id, |x| x.map(|v| scale * v + shift));
        self.unary(out, Op::Affine { x: self.id, scale })
    }

    pub fn one_minus(&self) -> Var<'g, T> {
        self.affine(-T::one(), T::one())
    }

    pub fn tanh(&self) -> Var<'g, T> {
        let out = self.graph.with_value(self.id, |x| x.map(tanh));
        self.unary(out, Op::Tanh(self.id))
    }

    pub fn sigmoid(&self) -> Var<'g, T> {
        let out = self.graph.with_value(self.id, |x| x.map(sigmoid));
        self.unary(out, Op::Sigmoid(self.id))
    }

    /// Softmax along the last axis.
    pub fn softmax(&self) -> Result<Var<'g, T>> {
        self.masked_softmax(None)
    }

    /// Softmax along the last axis of a rank-2 tensor where positions with
    /// `mask[i][j] == false` get exactly zero weight. Every row needs at least
    /// one open position.
    pub fn masked_softmax(&self, mask: Option<&[Vec<bool>]>) -> Result<Var<'g, T>> {
        let out = {
            let nodes = self.graph.nodes.borrow();
            let x = &nodes[self.id].value;
            let cols = *x.shape().last().unwrap_or(&0);
            if cols == 0 {
                return Err(Error::ShapeMismatch { op: "softmax", left: x.shape().to_vec(), right: vec![] });
            }
            let mut out = x.clone();
            for (i, row) in out.data_mut().chunks_mut(cols).enumerate() {
                match mask {
                    None => softmax_in_place(row),
                    Some(mask) => {
                        let open = &mask[i];
                        if open.len() != cols || !open.iter().any(|&o| o) {
                            return Err(Error::ShapeMismatch {
                                op: "masked_softmax",
                                left: x.shape().to_vec(),
                                right: vec![open.len()],
                            });
                        }
                        let max =
                            row.iter().zip(open).filter(|(_, &o)| o).map(|(&v, _)| v).fold(T::neg_infinity(), T::max);
                        let mut total = T::zero();
                        for (v, &o) in row.iter_mut().zip(open) {
                            *v = if o { (*v - max).exp() } else { T::zero() };
                            total += *v;
                        }
                        for v in row.iter_mut() {
                            *v = *v / total;
                        }
                    }
                }
            }
            out
        };
        Ok(self.unary(out, Op::Softmax { x: self.id }))
    }

    pub fn activation(&self, kind: ActivationKind) -> Result<Var<'g, T>> {
        Ok(match kind {
            ActivationKind::Linear => *self,
            ActivationKind::Tanh => self.tanh(),
            ActivationKind::Sigmoid => self.sigmoid(),
            ActivationKind::Softmax => self.softmax()?,
        })
    }

    /// Selects rows of a `(v, d)` table; the embedding lookup.
    pub fn gather_rows(&self, ids: &[usize]) -> Result<Var<'g, T>> {
        let out = {
            let nodes = self.graph.nodes.borrow();
            let table = &nodes[self.id].value;
            let (v, d) = table.dims2()?;
            let mut out = Vec::with_capacity(ids.len() * d);
            for &id in ids {
                if id >= v {
                    return Err(Error::IdOutOfRange { id, size: v });
                }
                out.extend_from_slice(table.row(id));
            }
            Tensor::new([ids.len(), d], out)?
        };
        Ok(self.unary(out, Op::Gather { table: self.id, ids: ids.to_vec() }))
    }

    /// Column `col` of a rank-2 tensor as an `(rows, 1)` tensor.
    pub fn column(&self, col: usize) -> Result<Var<'g, T>> {
        let out = {
            let nodes = self.graph.nodes.borrow();
            let x = &nodes[self.id].value;
            let (rows, cols) = x.dims2()?;
            if col >= cols {
                return Err(Error::IdOutOfRange { id: col, size: cols });
            }
            Tensor::new([rows, 1], (0..rows).map(|i| x.data()[i * cols + col]).collect())?
        };
        Ok(self.unary(out, Op::Column { x: self.id, col }))
    }

    /// Multiplies row `i` by `scale[i, 0]`.
    pub fn scale_rows(&self, scale: &Var<'g, T>) -> Result<Var<'g, T>> {
        self.same_graph(scale);
        let out = {
            let nodes = self.graph.nodes.borrow();
            let (x, s) = (&nodes[self.id].value, &nodes[scale.id].value);
            let (rows, cols) = x.dims2()?;
            if s.shape() != [rows, 1] {
                return Err(Error::ShapeMismatch {
                    op: "scale_rows",
                    left: x.shape().to_vec(),
                    right: s.shape().to_vec(),
                });
            }
            let mut out = x.clone();
            for (i, row) in out.data_mut().chunks_mut(cols).enumerate() {
                for v in row.iter_mut() {
                    *v *= s.data()[i];
                }
            }
            out
        };
        Ok(self.binary(scale, out, Op::ScaleRows { x: self.id, scale: scale.id }))
    }

    pub fn sum(&self) -> Var<'g, T> {
        let out = self.graph.with_value(self.id, |x| Tensor::scalar(x.sum()));
        self.unary(out, Op::Sum(self.id))
    }

    /// Sum over rows of `-log softmax(row)[target]`, skipping rows whose
    /// target is `None`.
    pub fn cross_entropy_sum(&self, targets: &[Option<usize>]) -> Result<Var<'g, T>> {
        let (out, probs) = {
            let nodes = self.graph.nodes.borrow();
            let x = &nodes[self.id].value;
            let (rows, v) = x.dims2()?;
            if targets.len() != rows {
                return Err(Error::ShapeMismatch {
                    op: "cross_entropy",
                    left: x.shape().to_vec(),
                    right: vec![targets.len()],
                });
            }
            let mut probs = x.data().to_vec();
            let mut total = T::zero();
            for (i, target) in targets.iter().enumerate() {
                let row = &mut probs[i * v..(i + 1) * v];
                softmax_in_place(row);
                if let Some(t) = *target {
                    if t >= v {
                        return Err(Error::IdOutOfRange { id: t, size: v });
                    }
                    // log-sum-exp form keeps the value finite even when p underflows
                    let logits = x.row(i);
                    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
                    let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<T>().ln();
                    total += lse - logits[t];
                }
            }
            (Tensor::scalar(total), probs)
        };
        Ok(self.unary(out, Op::CrossEntropy { logits: self.id, targets: targets.to_vec(), probs }))
    }
}
