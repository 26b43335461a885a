//! Tape-based reverse-mode differentiation over [`Tensor`]s.
//!
//! A [`Graph`] records every operation in creation order, so reverse
//! creation order is a valid topological order for the backward sweep.

use std::rc::Rc;

use super::kernels::{matmul_acc, matmul_tn_acc, transpose};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Shared row-index list for gather and segment operations.
pub type Index = Rc<[usize]>;

/// Handle to a node recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<S> {
    Leaf,
    MatMul(Var, Var),
    Affine(Var, Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    MulCol(Var, Var),
    Div(Var, Var),
    Scale(Var, S),
    AddScalar(Var),
    Relu(Var),
    Sigmoid(Var),
    Ln(Var),
    Sum(Var),
    Mean(Var),
    Concat(Vec<Var>),
    SliceCols(Var, usize),
    Gather(Var, Index),
    SegmentSum(Var, Index),
    SegmentMax(Var, Vec<usize>),
}

#[derive(Debug)]
struct Node<S> {
    value: Tensor<S>,
    op: Op<S>,
    needs_grad: bool,
}

/// Recording tape. Single-threaded; use one graph per training step.
#[derive(Debug)]
pub struct Graph<S> {
    nodes: Vec<Node<S>>,
    non_finite: Option<&'static str>,
}

impl<S: Scalar> Default for Graph<S> {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients of a scalar loss, indexed by the [`Var`]s of the graph that produced it.
#[derive(Debug)]
pub struct Gradients<S> {
    grads: Vec<Option<Tensor<S>>>,
}

impl<S: Scalar> Gradients<S> {
    pub fn get(&self, v: Var) -> Option<&Tensor<S>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient of `v`, or zeros of the given shape if `v` did not influence the loss.
    pub fn get_or_zeros(&self, v: Var, shape: [usize; 2]) -> Tensor<S> {
        self.get(v).cloned().unwrap_or_else(|| Tensor::zeros(shape[0], shape[1]))
    }
}

fn check_same(op: &str, a: &Tensor<impl Scalar>, b: &Tensor<impl Scalar>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::config(format!("{op}: shape {:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

impl<S: Scalar> Graph<S> {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), non_finite: None }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<S> {
        &self.nodes[v.0].value
    }

    /// First operation that produced a NaN or infinity, if any.
    pub fn non_finite(&self) -> Option<&'static str> {
        self.non_finite
    }

    fn push(&mut self, value: Tensor<S>, op: Op<S>, needs_grad: bool, name: &'static str) -> Var {
        if self.non_finite.is_none() && !value.is_finite() {
            self.non_finite = Some(name);
        }
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn constant(&mut self, value: Tensor<S>) -> Var {
        self.push(value, Op::Leaf, false, "constant")
    }

    /// Leaf that receives a gradient.
    pub fn param(&mut self, value: Tensor<S>) -> Var {
        self.push(value, Op::Leaf, true, "param")
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.rows() {
            return Err(Error::config(format!("matmul: {:?} x {:?}", av.shape(), bv.shape())));
        }
        let (n, k, m) = (av.rows(), av.cols(), bv.cols());
        let mut out = Tensor::zeros(n, m);
        matmul_acc(av.data(), bv.data(), out.data_mut(), n, k, m);
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::MatMul(a, b), g, "matmul"))
    }

    /// `x w + b` with `b` a row broadcast over the rows of `x w`.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        if xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols() {
            return Err(Error::config(format!(
                "affine: input {:?}, weight {:?}, bias {:?}",
                xv.shape(),
                wv.shape(),
                bv.shape()
            )));
        }
        let (n, k, m) = (xv.rows(), xv.cols(), wv.cols());
        let mut data = Vec::with_capacity(n * m);
        for _ in 0..n {
            data.extend_from_slice(bv.data());
        }
        let mut out = Tensor::from_vec(n, m, data)?;
        matmul_acc(xv.data(), wv.data(), out.data_mut(), n, k, m);
        let g = self.needs(x) || self.needs(w) || self.needs(b);
        Ok(self.push(out, Op::Affine(x, w, b), g, "affine"))
    }

    fn zip_with(&mut self, a: Var, b: Var, name: &'static str, f: impl Fn(S, S) -> S) -> Result<Tensor<S>> {
        let (av, bv) = (self.value(a), self.value(b));
        check_same(name, av, bv)?;
        let data = av.data().iter().zip(bv.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::from_vec(av.rows(), av.cols(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_with(a, b, "add", |x, y| x + y)?;
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::Add(a, b), g, "add"))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_with(a, b, "sub", |x, y| x - y)?;
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::Sub(a, b), g, "sub"))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_with(a, b, "mul", |x, y| x * y)?;
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::Mul(a, b), g, "mul"))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_with(a, b, "div", |x, y| x / y)?;
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::Div(a, b), g, "div"))
    }

    /// Adds a `1 x m` row to every row of an `n x m` tensor.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (av, rv) = (self.value(a), self.value(row));
        if rv.rows() != 1 || rv.cols() != av.cols() {
            return Err(Error::config(format!("add_row: {:?} + {:?}", av.shape(), rv.shape())));
        }
        let m = av.cols();
        let mut out = av.clone();
        for chunk in out.data_mut().chunks_exact_mut(m.max(1)) {
            for (o, &r) in chunk.iter_mut().zip(rv.data()) {
                *o += r;
            }
        }
        let g = self.needs(a) || self.needs(row);
        Ok(self.push(out, Op::AddRow(a, row), g, "add_row"))
    }

    /// Multiplies every row `i` of an `n x m` tensor by entry `i` of an `n x 1` column.
    pub fn mul_col(&mut self, a: Var, col: Var) -> Result<Var> {
        let (av, cv) = (self.value(a), self.value(col));
        if cv.cols() != 1 || cv.rows() != av.rows() {
            return Err(Error::config(format!("mul_col: {:?} * {:?}", av.shape(), cv.shape())));
        }
        let m = av.cols();
        let mut out = av.clone();
        if m > 0 {
            for (chunk, &c) in out.data_mut().chunks_exact_mut(m).zip(cv.data()) {
                for o in chunk {
                    *o *= c;
                }
            }
        }
        let g = self.needs(a) || self.needs(col);
        Ok(self.push(out, Op::MulCol(a, col), g, "mul_col"))
    }

    pub fn scale(&mut self, a: Var, s: S) -> Var {
        let out = self.value(a).map(|x| x * s);
        let g = self.needs(a);
        self.push(out, Op::Scale(a, s), g, "scale")
    }

    pub fn add_scalar(&mut self, a: Var, s: S) -> Var {
        let out = self.value(a).map(|x| x + s);
        let g = self.needs(a);
        self.push(out, Op::AddScalar(a), g, "add_scalar")
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|x| if x > S::zero() { x } else { S::zero() });
        let g = self.needs(a);
        self.push(out, Op::Relu(a), g, "relu")
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = self.value(a).map(sigmoid);
        let g = self.needs(a);
        self.push(out, Op::Sigmoid(a), g, "sigmoid")
    }

    pub fn ln(&mut self, a: Var) -> Var {
        let out = self.value(a).map(S::ln);
        let g = self.needs(a);
        self.push(out, Op::Ln(a), g, "ln")
    }

    pub fn log2(&mut self, a: Var) -> Var {
        let l = self.ln(a);
        self.scale(l, S::one() / S::of(std::f64::consts::LN_2))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let total = self.value(a).data().iter().copied().sum();
        let g = self.needs(a);
        self.push(Tensor::scalar(total), Op::Sum(a), g, "sum")
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let v = self.value(a);
        let n = S::of(v.len() as f64);
        let total: S = v.data().iter().copied().sum();
        let g = self.needs(a);
        self.push(Tensor::scalar(total / n), Op::Mean(a), g, "mean")
    }

    /// Column-wise concatenation of tensors with equal row counts.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or_else(|| Error::config("concat_cols: no inputs"))?;
        let rows = self.value(*first).rows();
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let v = self.value(p);
            if v.rows() != rows {
                return Err(Error::config(format!("concat_cols: row count {} vs {rows}", v.rows())));
            }
            widths.push(v.cols());
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row_slice(r));
            }
        }
        let out = Tensor::from_vec(rows, total, data)?;
        let g = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(out, Op::Concat(parts.to_vec()), g, "concat"))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, width: usize) -> Result<Var> {
        let av = self.value(a);
        if start + width > av.cols() {
            return Err(Error::config(format!("slice_cols: {start}+{width} > {}", av.cols())));
        }
        let mut data = Vec::with_capacity(av.rows() * width);
        for r in 0..av.rows() {
            data.extend_from_slice(&av.row_slice(r)[start..start + width]);
        }
        let out = Tensor::from_vec(av.rows(), width, data)?;
        let g = self.needs(a);
        Ok(self.push(out, Op::SliceCols(a, start), g, "slice_cols"))
    }

    /// Row gather: output row `r` is input row `index[r]`.
    pub fn gather_rows(&mut self, a: Var, index: &Index) -> Result<Var> {
        let av = self.value(a);
        let m = av.cols();
        let mut data = Vec::with_capacity(index.len() * m);
        for &r in index.iter() {
            if r >= av.rows() {
                return Err(Error::config(format!("gather_rows: row {r} of {}", av.rows())));
            }
            data.extend_from_slice(av.row_slice(r));
        }
        let out = Tensor::from_vec(index.len(), m, data)?;
        let g = self.needs(a);
        Ok(self.push(out, Op::Gather(a, index.clone()), g, "gather_rows"))
    }

    /// Sums input row `r` into output row `segment[r]`; `groups` rows out.
    pub fn segment_sum(&mut self, a: Var, segment: &Index, groups: usize) -> Result<Var> {
        let av = self.value(a);
        if segment.len() != av.rows() {
            return Err(Error::config(format!("segment_sum: {} ids for {} rows", segment.len(), av.rows())));
        }
        let m = av.cols();
        let mut out = Tensor::zeros(groups, m);
        for (r, &s) in segment.iter().enumerate() {
            if s >= groups {
                return Err(Error::config(format!("segment_sum: group {s} of {groups}")));
            }
            let src = av.row_slice(r);
            let dst = &mut out.data_mut()[s * m..(s + 1) * m];
            for (d, &x) in dst.iter_mut().zip(src) {
                *d += x;
            }
        }
        let g = self.needs(a);
        Ok(self.push(out, Op::SegmentSum(a, segment.clone()), g, "segment_sum"))
    }

    /// Column-wise maximum per segment. Empty segments yield zero.
    pub fn segment_max(&mut self, a: Var, segment: &Index, groups: usize) -> Result<Var> {
        let av = self.value(a);
        if segment.len() != av.rows() {
            return Err(Error::config(format!("segment_max: {} ids for {} rows", segment.len(), av.rows())));
        }
        let m = av.cols();
        let mut arg = vec![usize::MAX; groups * m];
        for (r, &s) in segment.iter().enumerate() {
            if s >= groups {
                return Err(Error::config(format!("segment_max: group {s} of {groups}")));
            }
            for c in 0..m {
                let slot = &mut arg[s * m + c];
                if *slot == usize::MAX || av.get(r, c) > av.get(*slot, c) {
                    *slot = r;
                }
            }
        }
        let data = arg
            .iter()
            .enumerate()
            .map(|(i, &r)| if r == usize::MAX { S::zero() } else { av.get(r, i % m) })
            .collect();
        let out = Tensor::from_vec(groups, m, data)?;
        let g = self.needs(a);
        Ok(self.push(out, Op::SegmentMax(a, arg), g, "segment_max"))
    }

    /// Reverse sweep from a `1 x 1` loss. Clears the tape afterwards.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients<S>> {
        if !self.value(loss).is_scalar() {
            return Err(Error::usage(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        if let Some(op) = self.non_finite {
            return Err(Error::NonFinite { op });
        }
        let mut grads: Vec<Option<Tensor<S>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(S::one()));

        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if matches!(node.op, Op::Leaf) {
                grads[idx] = Some(g);
                continue;
            }
            self.propagate(node, &g, &mut grads);
        }
        // Only leaves keep their gradients.
        for (node, slot) in self.nodes.iter().zip(grads.iter_mut()) {
            if !matches!(node.op, Op::Leaf) {
                *slot = None;
            }
        }
        self.nodes.clear();
        self.non_finite = None;
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node<S>, g: &Tensor<S>, grads: &mut [Option<Tensor<S>>]) {
        let val = |v: Var| &self.nodes[v.0].value;
        let needs = |v: Var| self.nodes[v.0].needs_grad;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                let (n, k, m) = (av.rows(), av.cols(), bv.cols());
                if needs(*a) {
                    let bt = transpose(bv.data(), k, m);
                    let slot = slot(grads, *a, [n, k]);
                    matmul_acc(g.data(), &bt, slot.data_mut(), n, m, k);
                }
                if needs(*b) {
                    let slot = slot(grads, *b, [k, m]);
                    matmul_tn_acc(av.data(), g.data(), slot.data_mut(), n, k, m);
                }
            }
            Op::Affine(x, w, b) => {
                let (xv, wv) = (val(*x), val(*w));
                let (n, k, m) = (xv.rows(), xv.cols(), wv.cols());
                if needs(*x) {
                    let wt = transpose(wv.data(), k, m);
                    let slot = slot(grads, *x, [n, k]);
                    matmul_acc(g.data(), &wt, slot.data_mut(), n, m, k);
                }
                if needs(*w) {
                    let slot = slot(grads, *w, [k, m]);
                    matmul_tn_acc(xv.data(), g.data(), slot.data_mut(), n, k, m);
                }
                if needs(*b) {
                    let slot = slot(grads, *b, [1, m]);
                    add_col_sums(slot, g);
                }
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if needs(v) {
                        slot(grads, v, g.shape()).add_assign(g);
                    }
                }
            }
            Op::Sub(a, b) => {
                if needs(*a) {
                    slot(grads, *a, g.shape()).add_assign(g);
                }
                if needs(*b) {
                    let s = slot(grads, *b, g.shape());
                    for (o, &x) in s.data_mut().iter_mut().zip(g.data()) {
                        *o -= x;
                    }
                }
            }
            Op::AddRow(a, row) => {
                if needs(*a) {
                    slot(grads, *a, g.shape()).add_assign(g);
                }
                if needs(*row) {
                    let s = slot(grads, *row, [1, g.cols()]);
                    add_col_sums(s, g);
                }
            }
            Op::Mul(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                if needs(*a) {
                    let s = slot(grads, *a, g.shape());
                    for ((o, &x), &y) in s.data_mut().iter_mut().zip(g.data()).zip(bv.data()) {
                        *o += x * y;
                    }
                }
                if needs(*b) {
                    let s = slot(grads, *b, g.shape());
                    for ((o, &x), &y) in s.data_mut().iter_mut().zip(g.data()).zip(av.data()) {
                        *o += x * y;
                    }
                }
            }
            Op::MulCol(a, col) => {
                let (av, cv) = (val(*a), val(*col));
                let m = av.cols();
                if needs(*a) && m > 0 {
                    let s = slot(grads, *a, g.shape());
                    for ((o, gr), &c) in s.data_mut().chunks_exact_mut(m).zip(g.data().chunks_exact(m)).zip(cv.data()) {
                        for (oo, &x) in o.iter_mut().zip(gr) {
                            *oo += x * c;
                        }
                    }
                }
                if needs(*col) && m > 0 {
                    let s = slot(grads, *col, cv.shape());
                    for ((o, gr), ar) in s.data_mut().iter_mut().zip(g.data().chunks_exact(m)).zip(av.data().chunks_exact(m)) {
                        *o += gr.iter().zip(ar).map(|(&x, &y)| x * y).sum::<S>();
                    }
                }
            }
            Op::Div(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                if needs(*a) {
                    let s = slot(grads, *a, g.shape());
                    for ((o, &x), &y) in s.data_mut().iter_mut().zip(g.data()).zip(bv.data()) {
                        *o += x / y;
                    }
                }
                if needs(*b) {
                    let s = slot(grads, *b, g.shape());
                    for (((o, &x), &num), &den) in s.data_mut().iter_mut().zip(g.data()).zip(av.data()).zip(bv.data()) {
                        *o -= x * num / (den * den);
                    }
                }
            }
            Op::Scale(a, c) => {
                if needs(*a) {
                    let s = slot(grads, *a, g.shape());
                    for (o, &x) in s.data_mut().iter_mut().zip(g.data()) {
                        *o += x * *c;
                    }
                }
            }
            Op::AddScalar(a) => {
                if needs(*a) {
                    slot(grads, *a, g.shape()).add_assign(g);
                }
            }
            Op::Relu(a) => {
                if needs(*a) {
                    let av = val(*a);
                    let s = slot(grads, *a, g.shape());
                    for ((o, &x), &inp) in s.data_mut().iter_mut().zip(g.data()).zip(av.data()) {
                        if inp > S::zero() {
                            *o += x;
                        }
                    }
                }
            }
            Op::Sigmoid(a) => {
                if needs(*a) {
                    let s = slot(grads, *a, g.shape());
                    for ((o, &x), &y) in s.data_mut().iter_mut().zip(g.data()).zip(node.value.data()) {
                        *o += x * y * (S::one() - y);
                    }
                }
            }
            Op::Ln(a) => {
                if needs(*a) {
                    let av = val(*a);
                    let s = slot(grads, *a, g.shape());
                    for ((o, &x), &inp) in s.data_mut().iter_mut().zip(g.data()).zip(av.data()) {
                        *o += x / inp;
                    }
                }
            }
            Op::Sum(a) | Op::Mean(a) => {
                if needs(*a) {
                    let av = val(*a);
                    let mut upstream = g.data()[0];
                    if matches!(node.op, Op::Mean(_)) {
                        upstream /= S::of(av.len() as f64);
                    }
                    let s = slot(grads, *a, av.shape());
                    for o in s.data_mut() {
                        *o += upstream;
                    }
                }
            }
            Op::Concat(parts) => {
                let rows = g.rows();
                let mut offset = 0;
                for &p in parts {
                    let w = val(p).cols();
                    if needs(p) {
                        let s = slot(grads, p, [rows, w]);
                        for r in 0..rows {
                            let src = &g.row_slice(r)[offset..offset + w];
                            for (o, &x) in s.data_mut()[r * w..(r + 1) * w].iter_mut().zip(src) {
                                *o += x;
                            }
                        }
                    }
                    offset += w;
                }
            }
            Op::SliceCols(a, start) => {
                if needs(*a) {
                    let av = val(*a);
                    let (w, m) = (g.cols(), av.cols());
                    let s = slot(grads, *a, av.shape());
                    for r in 0..g.rows() {
                        for (o, &x) in s.data_mut()[r * m + start..r * m + start + w].iter_mut().zip(g.row_slice(r)) {
                            *o += x;
                        }
                    }
                }
            }
            Op::Gather(a, index) => {
                if needs(*a) {
                    let av = val(*a);
                    let m = av.cols();
                    let s = slot(grads, *a, av.shape());
                    for (r, &src) in index.iter().enumerate() {
                        for (o, &x) in s.data_mut()[src * m..(src + 1) * m].iter_mut().zip(g.row_slice(r)) {
                            *o += x;
                        }
                    }
                }
            }
            Op::SegmentSum(a, segment) => {
                if needs(*a) {
                    let av = val(*a);
                    let m = av.cols();
                    let s = slot(grads, *a, av.shape());
                    for (r, &seg) in segment.iter().enumerate() {
                        for (o, &x) in s.data_mut()[r * m..(r + 1) * m].iter_mut().zip(g.row_slice(seg)) {
                            *o += x;
                        }
                    }
                }
            }
            Op::SegmentMax(a, arg) => {
                if needs(*a) {
                    let av = val(*a);
                    let m = av.cols();
                    let s = slot(grads, *a, av.shape());
                    for (i, &r) in arg.iter().enumerate() {
                        if r != usize::MAX {
                            let c = i % m;
                            s.data_mut()[r * m + c] += g.data()[i];
                        }
                    }
                }
            }
        }
    }
}

fn slot<S: Scalar>(grads: &mut [Option<Tensor<S>>], v: Var, shape: [usize; 2]) -> &mut Tensor<S> {
    grads[v.0].get_or_insert_with(|| Tensor::zeros(shape[0], shape[1]))
}

fn add_col_sums<S: Scalar>(out: &mut Tensor<S>, g: &Tensor<S>) {
    let m = g.cols();
    if m == 0 {
        return;
    }
    for row in g.data().chunks_exact(m) {
        for (o, &x) in out.data_mut().iter_mut().zip(row) {
            *o += x;
        }
    }
}

/// Numerically stable logistic function.
pub fn sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}
