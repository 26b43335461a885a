//! Graph-neural power-control policies.
//!
//! Three kinds share the layout embed → aggregate → update → output:
//!
//! * `Mpnn`: per-edge messages `Φ(e_j, z_j, g̃_ji)` summed over `j != i`.
//! * `AirMpnn`: each node sends a pilot at `P σ(Φ(e_j, z_j))`; the aggregate
//!   is the received interference power, available over the air.
//! * `AirMprnn`: one recurrent cell per frame; the pilot power comes from the
//!   previous frame's embedding, so one broadcast per frame suffices.
//!
//! `z_i` is the normalized direct gain; weights only enter the rate.

mod batch;
mod forward;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use batch::{edge_index, BatchInput};
pub use forward::{mean_sum_rate, BoundPolicy, Mode, RecurrentState};

use crate::airphy::Aggregation;
use crate::diffmath::{Mlp, OutputActivation};
use crate::error::{Error, Result};
use crate::evalmetrics::Scheme;
use crate::scalar::Scalar;

/// Width of the node embedding `e_i`.
pub const EMBED: usize = 8;

/// Lowest recurrent pilot power as a fraction of `P`. The recurrent policy
/// estimates its own direct gain from its pilot, so the pilot must stay well
/// above the noise floor even where Φ saturates.
pub const RECURRENT_PILOT_FLOOR: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Mpnn,
    AirMpnn,
    AirMprnn,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Mpnn, PolicyKind::AirMpnn, PolicyKind::AirMprnn];

    pub fn scheme(self) -> Scheme {
        match self {
            PolicyKind::Mpnn => Scheme::Mpnn,
            PolicyKind::AirMpnn => Scheme::AirMpnn,
            PolicyKind::AirMprnn => Scheme::AirMprnn,
        }
    }

    pub fn name(self) -> &'static str {
        self.scheme().name()
    }

    pub fn is_recurrent(self) -> bool {
        self == PolicyKind::AirMprnn
    }

    /// Mean for the edge-message network: a plain sum of `K - 1` unnormalized
    /// messages saturates the output sigmoid at initialization. The air kinds
    /// sum, and their aggregate is standardized with `m̄, m̂`.
    pub fn default_aggregation(self) -> Aggregation {
        match self {
            PolicyKind::Mpnn => Aggregation::Mean,
            _ => Aggregation::Sum,
        }
    }

    /// Layer widths of (Φ, U, Ω).
    pub fn structure(self) -> [&'static [usize]; 3] {
        const OUTPUT: &[usize] = &[EMBED, 16, 1];
        match self {
            PolicyKind::Mpnn => [&[EMBED + 2, 32, 32], &[EMBED + 32 + 1, 16, EMBED], OUTPUT],
            PolicyKind::AirMpnn => [&[EMBED + 1, 32, 32, 1], &[EMBED + 2, 16, EMBED], OUTPUT],
            PolicyKind::AirMprnn => [&[EMBED + 1, 32, 32, 1], &[EMBED + 2, 32, EMBED], OUTPUT],
        }
    }

    fn message_activation(self) -> OutputActivation {
        match self {
            PolicyKind::Mpnn => OutputActivation::Linear,
            _ => OutputActivation::Sigmoid,
        }
    }

    pub(crate) fn code(self) -> u64 {
        match self {
            PolicyKind::Mpnn => 0,
            PolicyKind::AirMpnn => 1,
            PolicyKind::AirMprnn => 2,
        }
    }

    pub(crate) fn from_code(c: u64) -> Option<Self> {
        PolicyKind::ALL.into_iter().find(|k| k.code() == c)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::usage(format!("unknown policy kind {s:?}; expected mpnn, air-mpnn or air-mprnn")))
    }
}

/// Domain in which gains are standardized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainScale {
    /// `(g - mean) / std` on linear power gains.
    #[default]
    Linear,
    /// `(log10(g + floor) - mean) / std`.
    Log,
}

/// Training-set gain statistics used to normalize node and edge inputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub scale: GainScale,
    /// Added before the logarithm in the log domain, so empty aggregates stay finite.
    pub floor: f64,
    pub direct_mean: f64,
    pub direct_std: f64,
    /// `m̄`: mean interference-link power gain (in the chosen domain).
    pub cross_mean: f64,
    /// `m̂`: standard deviation of interference-link power gains.
    pub cross_std: f64,
}

impl Default for NormStats {
    fn default() -> Self {
        Self { scale: GainScale::Linear, floor: 0.0, direct_mean: 0.0, direct_std: 1.0, cross_mean: 0.0, cross_std: 1.0 }
    }
}

impl NormStats {
    pub fn validate(&self) -> Result<()> {
        let all = [self.floor, self.direct_mean, self.direct_std, self.cross_mean, self.cross_std];
        if all.iter().any(|v| !v.is_finite()) || !(self.direct_std > 0.0) || !(self.cross_std > 0.0) {
            return Err(Error::config(format!("normalization statistics must be finite with positive spread: {self:?}")));
        }
        if self.scale == GainScale::Log && !(self.floor > 0.0) {
            return Err(Error::config("log-domain normalization needs a positive floor"));
        }
        Ok(())
    }

    /// Maps a linear gain into the standardization domain.
    pub fn transform(&self, g: f64) -> f64 {
        match self.scale {
            GainScale::Linear => g,
            GainScale::Log => (g + self.floor).log10(),
        }
    }

    pub fn direct(&self, g: f64) -> f64 {
        (self.transform(g) - self.direct_mean) / self.direct_std
    }

    pub fn cross(&self, g: f64) -> f64 {
        (self.transform(g) - self.cross_mean) / self.cross_std
    }
}

/// Φ, U and Ω of one policy plus its normalization constants.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyModel<S> {
    kind: PolicyKind,
    pub message: Mlp<S>,
    pub update: Mlp<S>,
    pub output: Mlp<S>,
    layers: usize,
    pub aggregation: Aggregation,
    pub norm: NormStats,
}

impl<S: Scalar> PolicyModel<S> {
    /// Randomly initialized model with the kind's default aggregation;
    /// `layers` is forced to 1 for the recurrent kind.
    pub fn new<R: Rng + ?Sized>(kind: PolicyKind, layers: usize, norm: NormStats, rng: &mut R) -> Result<Self> {
        let [phi, u, omega] = kind.structure();
        let message = Mlp::new(phi, kind.message_activation(), rng)?;
        let update = Mlp::new(u, OutputActivation::Linear, rng)?;
        let output = Mlp::new(omega, OutputActivation::Sigmoid, rng)?;
        Self::from_parts(kind, layers, kind.default_aggregation(), norm, message, update, output)
    }

    pub fn from_parts(
        kind: PolicyKind,
        layers: usize,
        aggregation: Aggregation,
        norm: NormStats,
        message: Mlp<S>,
        update: Mlp<S>,
        output: Mlp<S>,
    ) -> Result<Self> {
        norm.validate()?;
        let [phi, u, omega] = kind.structure();
        for (name, mlp, dims) in [("message", &message, phi), ("update", &update, u), ("output", &output, omega)] {
            if mlp.dims() != dims {
                return Err(Error::config(format!("{kind} {name} network must be {dims:?}, got {:?}", mlp.dims())));
            }
        }
        if output.output_activation() != OutputActivation::Sigmoid
            || message.output_activation() != kind.message_activation()
        {
            return Err(Error::config(format!("{kind} output heads have the wrong activation")));
        }
        let layers = if kind.is_recurrent() { 1 } else { layers };
        if layers == 0 {
            return Err(Error::config("at least one message-passing layer is required"));
        }
        Ok(Self { kind, message, update, output, layers, aggregation, norm })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn param_count(&self) -> usize {
        self.message.param_count() + self.update.param_count() + self.output.param_count()
    }

    pub fn mlps(&self) -> [(&'static str, &Mlp<S>); 3] {
        [("message", &self.message), ("update", &self.update), ("output", &self.output)]
    }

    pub fn mlps_mut(&mut self) -> [&mut Mlp<S>; 3] {
        [&mut self.message, &mut self.update, &mut self.output]
    }
}
