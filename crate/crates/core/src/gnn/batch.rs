use std::rc::Rc;

use super::NormStats;
use crate::diffmath::{Index, Tensor};
use crate::error::{Error, Result};
use crate::netgen::GainMatrix;
use crate::scalar::Scalar;

/// Directed interference edges `j -> i`, `j != i`, of `b` disjoint
/// `k`-node graphs, ordered by receiver then sender. Returns `(src, dst)`.
pub fn edge_index(b: usize, k: usize) -> (Index, Index) {
    let mut src = Vec::with_capacity(b * k * k.saturating_sub(1));
    let mut dst = Vec::with_capacity(src.capacity());
    for l in 0..b {
        for i in 0..k {
            for j in 0..k {
                if j != i {
                    src.push(l * k + j);
                    dst.push(l * k + i);
                }
            }
        }
    }
    (Rc::from(src), Rc::from(dst))
}

/// One frame of `b` same-size layouts, flattened to `b * k` nodes.
#[derive(Clone, Debug)]
pub struct BatchInput<S> {
    pub layouts: usize,
    pub pairs: usize,
    pub src: Index,
    pub dst: Index,
    /// Raw `g_ji` per edge, `E x 1`.
    pub edge_gain: Tensor<S>,
    /// Normalized `g_ji` per edge.
    pub edge_feature: Tensor<S>,
    /// Raw `g_ii` per node, `BK x 1`.
    pub direct: Tensor<S>,
    /// Normalized `g_ii` per node.
    pub z: Tensor<S>,
}

impl<S: Scalar> BatchInput<S> {
    pub fn new(frames: &[&GainMatrix], norm: &NormStats) -> Result<Self> {
        let first = frames.first().ok_or_else(|| Error::config("empty batch"))?;
        let k = first.k();
        if frames.iter().any(|g| g.k() != k) {
            return Err(Error::config("all layouts in a batch must have the same number of pairs"));
        }
        let b = frames.len();
        let (src, dst) = edge_index(b, k);
        let raw: Vec<f64> = src.iter().zip(dst.iter()).map(|(&s, &d)| frames[d / k].get(s % k, d % k)).collect();
        let edge_feature = Tensor::column(raw.iter().map(|&g| S::of(norm.cross(g))).collect());
        let edge_gain = Tensor::column(raw.iter().map(|&g| S::of(g)).collect());
        let dg: Vec<f64> = frames.iter().flat_map(|g| (0..k).map(|i| g.direct(i))).collect();
        let z = Tensor::column(dg.iter().map(|&g| S::of(norm.direct(g))).collect());
        let direct = Tensor::column(dg.iter().map(|&g| S::of(g)).collect());
        Ok(Self { layouts: b, pairs: k, src, dst, edge_gain, edge_feature, direct, z })
    }

    pub fn nodes(&self) -> usize {
        self.layouts * self.pairs
    }

    pub fn edges(&self) -> usize {
        self.src.len()
    }
}
