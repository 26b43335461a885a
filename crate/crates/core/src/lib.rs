//! Distributed power allocation for dense D2D networks with graph neural
//! networks whose messages are aggregated over the air.
//!
//! The differentiable core ([`diffmath`], [`gnn`], [`evalmetrics`]) is generic
//! over [`Scalar`] (`f32` or `f64`); the aliases below name the common
//! instantiations. Channel generation, pilots, baselines and training run in
//! `f64`.

pub mod airphy;
pub mod baselines;
pub mod checkpoint;
pub mod config;
pub mod diffmath;
pub mod error;
pub mod evalmetrics;
pub mod experiments;
pub mod gnn;
pub mod netgen;
pub mod oracle;
pub mod scalar;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type TensorF32 = diffmath::Tensor<f32>;
pub type TensorF64 = diffmath::Tensor<f64>;
pub type GraphF32 = diffmath::Graph<f32>;
pub type GraphF64 = diffmath::Graph<f64>;
pub type MlpF32 = diffmath::Mlp<f32>;
pub type MlpF64 = diffmath::Mlp<f64>;
pub type PolicyModelF32 = gnn::PolicyModel<f32>;
pub type PolicyModelF64 = gnn::PolicyModel<f64>;
