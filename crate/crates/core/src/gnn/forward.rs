use std::rc::Rc;

use num_complex::Complex64;

use super::{BatchInput, GainScale, PolicyKind, PolicyModel, EMBED, RECURRENT_PILOT_FLOOR};
use crate::airphy::{air_local_gain, Aggregation, AirChannel};
use crate::diffmath::{BoundMlp, Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::netgen::{ChannelEpisode, GainMatrix};
use crate::scalar::Scalar;

/// Where aggregates come from during a forward pass.
#[derive(Debug)]
pub enum Mode<'a> {
    /// Closed-form sums, differentiable.
    Ideal,
    /// Signal-level pilots for a single layout; `coeffs[j * k + i] = h_ji`.
    Physical { air: &'a mut AirChannel, coeffs: &'a [Complex64], max_power: f64 },
}

/// Parameters of a [`PolicyModel`] registered on a graph.
#[derive(Clone, Debug)]
pub struct BoundPolicy {
    message: BoundMlp,
    update: BoundMlp,
    output: BoundMlp,
    /// Rows of Φ's first weight acting on `[e_j, z_j]` and on the edge gain.
    split: Option<(Var, Var)>,
}

impl BoundPolicy {
    /// Parameter handles in the order of [`PolicyModel::mlps`].
    pub fn mlps(&self) -> [&BoundMlp; 3] {
        [&self.message, &self.update, &self.output]
    }
}

/// Embedding and local state carried from one frame to the next.
#[derive(Clone, Copy, Debug)]
pub struct RecurrentState {
    pub e: Var,
    pub z: Var,
}

impl<S: Scalar> PolicyModel<S> {
    pub fn bind(&self, g: &mut Graph<S>) -> Result<BoundPolicy> {
        let message = self.message.bind(g);
        let split = if self.kind == PolicyKind::Mpnn {
            let w = message.weight(0);
            let node: Rc<[usize]> = (0..=EMBED).collect();
            let edge: Rc<[usize]> = Rc::from([EMBED + 1]);
            Some((g.gather_rows(w, &node)?, g.gather_rows(w, &edge)?))
        } else {
            None
        };
        Ok(BoundPolicy { message, update: self.update.bind(g), output: self.output.bind(g), split })
    }

    /// Powers in `(0, 1)` for one frame, `BK x 1`. Not for the recurrent kind.
    pub fn forward(&self, g: &mut Graph<S>, bp: &BoundPolicy, x: &BatchInput<S>, mode: &mut Mode<'_>) -> Result<Var> {
        if self.kind.is_recurrent() {
            return Err(Error::usage("the recurrent policy runs frame by frame through `step`"));
        }
        let z = g.constant(x.z.clone());
        let mut e = g.constant(Tensor::zeros(x.nodes(), EMBED));
        for _ in 0..self.layers {
            let a = match self.kind {
                PolicyKind::Mpnn => self.message_aggregate(g, bp, e, z, x)?,
                _ => {
                    let input = g.concat_cols(&[e, z])?;
                    let pilot = bp.message.apply(g, input)?;
                    let (agg, _) = self.air_aggregate(g, pilot, x, mode, false)?;
                    agg
                }
            };
            let input = g.concat_cols(&[e, a, z])?;
            e = bp.update.apply(g, input)?;
        }
        bp.output.apply(g, e)
    }

    /// Zero embedding and the frame-0 local state.
    pub fn bootstrap(&self, g: &mut Graph<S>, first: &BatchInput<S>) -> RecurrentState {
        RecurrentState { e: g.constant(Tensor::zeros(first.nodes(), EMBED)), z: g.constant(first.z.clone()) }
    }

    /// One recurrent frame: pilot power from the previous state, a single
    /// broadcast yielding both `z(t)` and the interference, one update.
    pub fn step(
        &self,
        g: &mut Graph<S>,
        bp: &BoundPolicy,
        state: RecurrentState,
        x: &BatchInput<S>,
        mode: &mut Mode<'_>,
    ) -> Result<(Var, RecurrentState)> {
        if !self.kind.is_recurrent() {
            return Err(Error::usage(format!("{} has no recurrent step", self.kind)));
        }
        let input = g.concat_cols(&[state.e, state.z])?;
        let raw = bp.message.apply(g, input)?;
        let scaled = g.scale(raw, S::of(1.0 - RECURRENT_PILOT_FLOOR));
        let pilot = g.add_scalar(scaled, S::of(RECURRENT_PILOT_FLOOR));
        let (a, z) = self.air_aggregate(g, pilot, x, mode, true)?;
        let z = match z {
            Some(z) => z,
            None => g.constant(x.z.clone()),
        };
        let input = g.concat_cols(&[state.e, a, z])?;
        let e = bp.update.apply(g, input)?;
        let p = bp.output.apply(g, e)?;
        Ok((p, RecurrentState { e, z }))
    }

    /// Σ_j Φ(e_j, z_j, g̃_ji). The first layer is split into a node part and
    /// an edge part; for sum and mean the linear last layer is applied after
    /// the sum, which is exact and avoids the per-edge `32 x 32` product.
    fn message_aggregate(&self, g: &mut Graph<S>, bp: &BoundPolicy, e: Var, z: Var, x: &BatchInput<S>) -> Result<Var> {
        let (w_node, w_edge) = bp.split.expect("bound with split first layer");
        let phi = &bp.message;
        let nodes = x.nodes();
        let node_in = g.concat_cols(&[e, z])?;
        let node_part = g.matmul(node_in, w_node)?;
        let per_edge = g.gather_rows(node_part, &x.src)?;
        let feature = g.constant(x.edge_feature.clone());
        let edge_part = g.matmul(feature, w_edge)?;
        let h = g.add(per_edge, edge_part)?;
        let h = g.add_row(h, phi.bias(0))?;
        let mut h = g.relu(h);
        let last = phi.depth() - 1;
        for l in 1..last {
            let y = g.affine(h, phi.weight(l), phi.bias(l))?;
            h = g.relu(y);
        }
        let (w, b) = (phi.weight(last), phi.bias(last));
        match self.aggregation {
            Aggregation::Max => {
                let m = g.affine(h, w, b)?;
                g.segment_max(m, &x.dst, nodes)
            }
            Aggregation::Sum | Aggregation::Mean => {
                let s = g.segment_sum(h, &x.dst, nodes)?;
                let s = g.matmul(s, w)?;
                let neighbors = S::of(x.pairs.saturating_sub(1) as f64);
                let bias = g.scale(b, neighbors);
                let a = g.add_row(s, bias)?;
                Ok(if self.aggregation == Aggregation::Mean { g.scale(a, S::one() / S::of(x.pairs as f64)) } else { a })
            }
        }
    }

    /// Normalized received interference `(Σ_j σ_j g_ji - m̄) / m̂` (after the
    /// domain transform) for pilot
    /// powers `P σ_j`; in physical mode also the estimated normalized direct
    /// gain when `local` is set.
    fn air_aggregate(
        &self,
        g: &mut Graph<S>,
        pilot: Var,
        x: &BatchInput<S>,
        mode: &mut Mode<'_>,
        local: bool,
    ) -> Result<(Var, Option<Var>)> {
        let nodes = x.nodes();
        let (agg, z) = match mode {
            Mode::Ideal => {
                let sent = g.gather_rows(pilot, &x.src)?;
                let gains = g.constant(x.edge_gain.clone());
                let received = g.mul(sent, gains)?;
                let agg = match self.aggregation {
                    Aggregation::Max => g.segment_max(received, &x.dst, nodes)?,
                    Aggregation::Sum => g.segment_sum(received, &x.dst, nodes)?,
                    Aggregation::Mean => {
                        let s = g.segment_sum(received, &x.dst, nodes)?;
                        g.scale(s, S::one() / S::of(x.pairs as f64))
                    }
                };
                (agg, None)
            }
            Mode::Physical { air, coeffs, max_power } => {
                if x.layouts != 1 {
                    return Err(Error::usage("physical mode evaluates one layout at a time"));
                }
                let k = x.pairs;
                let powers: Vec<f64> = g.value(pilot).data().iter().map(|s| s.as_f64() * *max_power).collect();
                let coeffs: &[Complex64] = coeffs;
                let ys = air.broadcast(&powers, |j, i| coeffs[j * k + i])?;
                let agg = ys.iter().map(|y| S::of(air.aggregate(y, self.aggregation) / *max_power)).collect();
                let agg = g.constant(Tensor::column(agg));
                let z = if local {
                    let zs = ys
                        .iter()
                        .map(|y| {
                            let gain = air_local_gain(y, air.bank().sequence(y.owner), powers[y.owner])?;
                            Ok(S::of(self.norm.direct(gain)))
                        })
                        .collect::<Result<Vec<S>>>()?;
                    Some(g.constant(Tensor::column(zs)))
                } else {
                    None
                };
                (agg, z)
            }
        };
        let agg = match self.norm.scale {
            GainScale::Linear => agg,
            GainScale::Log => {
                let shifted = g.add_scalar(agg, S::of(self.norm.floor));
                let ln = g.ln(shifted);
                g.scale(ln, S::one() / S::of(std::f64::consts::LN_10))
            }
        };
        let scaled = g.scale(agg, S::one() / S::of(self.norm.cross_std));
        let normalized = g.add_scalar(scaled, S::of(-self.norm.cross_mean / self.norm.cross_std));
        Ok((normalized, z))
    }

    /// Ideal-mode powers for one frame of one layout.
    pub fn powers(&self, gains: &GainMatrix) -> Result<Vec<f64>> {
        let x = BatchInput::new(&[gains], &self.norm)?;
        let mut g = Graph::new();
        let bp = self.bind(&mut g)?;
        let p = self.forward(&mut g, &bp, &x, &mut Mode::Ideal)?;
        Ok(g.value(p).data().iter().map(|v| v.as_f64()).collect())
    }

    /// Per-frame powers over an episode. With `air = Some((channel, P))` the
    /// aggregates come from simulated pilots. `warm_start` extra recurrent
    /// rounds run on frame 0 before its output is taken.
    pub fn episode_powers(
        &self,
        ep: &ChannelEpisode,
        mut air: Option<(&mut AirChannel, f64)>,
        warm_start: usize,
    ) -> Result<Vec<Vec<f64>>> {
        let mut g = Graph::new();
        let bp = self.bind(&mut g)?;
        let mut out = Vec::with_capacity(ep.frames());
        let mut state = None;
        for t in 0..ep.frames() {
            let gains = ep.power_gains(t);
            let x = BatchInput::new(&[&gains], &self.norm)?;
            let coeffs = if air.is_some() { ep.coefficients(t) } else { Vec::new() };
            let rounds = if t == 0 { warm_start + 1 } else { 1 };
            let mut p = None;
            for _ in 0..rounds {
                let mut mode = match air.as_mut() {
                    Some((ch, max_power)) => Mode::Physical { air: &mut **ch, coeffs: &coeffs, max_power: *max_power },
                    None => Mode::Ideal,
                };
                if self.kind.is_recurrent() {
                    let s = *state.get_or_insert_with(|| self.bootstrap(&mut g, &x));
                    let (pt, next) = self.step(&mut g, &bp, s, &x, &mut mode)?;
                    state = Some(next);
                    p = Some(pt);
                } else {
                    p = Some(self.forward(&mut g, &bp, &x, &mut mode)?);
                    break;
                }
            }
            let p = p.expect("at least one round");
            out.push(g.value(p).data().iter().map(|v| v.as_f64()).collect());
        }
        Ok(out)
    }
}

/// Mean over layouts of `Σ_i w_i log2(1 + ξ_i)` with `ξ` computed from
/// gains scaled by `snr = P / noise`.
pub fn mean_sum_rate<S: Scalar>(g: &mut Graph<S>, p: Var, x: &BatchInput<S>, weights: Var, snr: f64) -> Result<Var> {
    let c = S::of(snr);
    let direct = g.constant(x.direct.map(|v| v * c));
    let cross = g.constant(x.edge_gain.map(|v| v * c));
    let signal = g.mul(p, direct)?;
    let sent = g.gather_rows(p, &x.src)?;
    let received = g.mul(sent, cross)?;
    let interference = g.segment_sum(received, &x.dst, x.nodes())?;
    let denom = g.add_scalar(interference, S::one());
    let sinr = g.div(signal, denom)?;
    let one_plus = g.add_scalar(sinr, S::one());
    let rate = g.log2(one_plus);
    let weighted = g.mul(rate, weights)?;
    let total = g.sum(weighted);
    Ok(g.scale(total, S::one() / S::of(x.layouts as f64)))
}
