use rand::Rng;

use super::graph::{sigmoid, Gradients, Graph, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HiddenActivation {
    Relu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputActivation {
    Linear,
    Sigmoid,
}

/// Fully connected network `y = act(... relu(x W1 + b1) ... W_L + b_L)`.
///
/// Weights are stored `d_in x d_out` so that inputs are batched along rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<S> {
    dims: Vec<usize>,
    weights: Vec<Tensor<S>>,
    biases: Vec<Tensor<S>>,
    hidden: HiddenActivation,
    output: OutputActivation,
}

impl<S: Scalar> Mlp<S> {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], output: OutputActivation, rng: &mut R) -> Result<Self> {
        let mut mlp = Self::zeros(dims, output)?;
        for w in &mut mlp.weights {
            let limit = (6.0 / (w.rows() + w.cols()) as f64).sqrt();
            for v in w.data_mut() {
                *v = S::of(rng.random_range(-limit..limit));
            }
        }
        Ok(mlp)
    }

    pub fn zeros(dims: &[usize], output: OutputActivation) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::config(format!("mlp needs at least two positive widths, got {dims:?}")));
        }
        let weights = dims.windows(2).map(|d| Tensor::zeros(d[0], d[1])).collect();
        let biases = dims.windows(2).map(|d| Tensor::zeros(1, d[1])).collect();
        Ok(Self { dims: dims.to_vec(), weights, biases, hidden: HiddenActivation::Relu, output })
    }

    /// Rebuilds a network from stored layers, validating every shape.
    pub fn from_parts(
        dims: Vec<usize>,
        weights: Vec<Tensor<S>>,
        biases: Vec<Tensor<S>>,
        output: OutputActivation,
    ) -> Result<Self> {
        let template = Self::zeros(&dims, output)?;
        if weights.len() != template.weights.len() || biases.len() != template.biases.len() {
            return Err(Error::config("layer count does not match dims"));
        }
        for (w, t) in weights.iter().zip(&template.weights).chain(biases.iter().zip(&template.biases)) {
            if w.shape() != t.shape() {
                return Err(Error::config(format!("layer shape {:?}, expected {:?}", w.shape(), t.shape())));
            }
        }
        Ok(Self { dims, weights, biases, hidden: HiddenActivation::Relu, output })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_width(&self) -> usize {
        self.dims[0]
    }

    pub fn output_width(&self) -> usize {
        *self.dims.last().expect("dims is non-empty")
    }

    pub fn hidden_activation(&self) -> HiddenActivation {
        self.hidden
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn weights(&self) -> &[Tensor<S>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Tensor<S>] {
        &self.biases
    }

    pub fn param_count(&self) -> usize {
        self.dims.windows(2).map(|d| d[0] * d[1] + d[1]).sum()
    }

    /// Parameter tensors in layer order, weight before bias.
    pub fn params(&self) -> impl Iterator<Item = &Tensor<S>> {
        self.weights.iter().zip(&self.biases).flat_map(|(w, b)| [w, b])
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Tensor<S>> {
        self.weights.iter_mut().zip(self.biases.iter_mut()).flat_map(|(w, b)| [w, b])
    }

    /// Tape-free forward pass over a batch of row inputs.
    pub fn forward(&self, input: &Tensor<S>) -> Result<Tensor<S>> {
        if input.cols() != self.input_width() {
            return Err(Error::config(format!(
                "mlp input width {} does not match first layer {}",
                input.cols(),
                self.input_width()
            )));
        }
        let mut x = input.clone();
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let (n, k, m) = (x.rows(), w.rows(), w.cols());
            let mut data = Vec::with_capacity(n * m);
            for _ in 0..n {
                data.extend_from_slice(b.data());
            }
            super::kernels::matmul_acc(x.data(), w.data(), &mut data, n, k, m);
            let mut y = Tensor::from_vec(n, m, data)?;
            y = if l < last {
                y.map(|v| if v > S::zero() { v } else { S::zero() })
            } else {
                match self.output {
                    OutputActivation::Linear => y,
                    OutputActivation::Sigmoid => y.map(sigmoid),
                }
            };
            x = y;
        }
        Ok(x)
    }

    /// Registers the parameters on a tape so that repeated applications share them.
    pub fn bind(&self, g: &mut Graph<S>) -> BoundMlp {
        let weights = self.weights.iter().map(|w| g.param(w.clone())).collect();
        let biases = self.biases.iter().map(|b| g.param(b.clone())).collect();
        BoundMlp { weights, biases, output: self.output, input_width: self.input_width() }
    }
}

/// An [`Mlp`] whose parameters live on a particular [`Graph`].
#[derive(Clone, Debug)]
pub struct BoundMlp {
    weights: Vec<Var>,
    biases: Vec<Var>,
    output: OutputActivation,
    input_width: usize,
}

impl BoundMlp {
    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    /// Weight of layer `l`, shaped `d_l x d_{l+1}`.
    pub fn weight(&self, l: usize) -> Var {
        self.weights[l]
    }

    pub fn bias(&self, l: usize) -> Var {
        self.biases[l]
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn apply<S: Scalar>(&self, g: &mut Graph<S>, input: Var) -> Result<Var> {
        if g.value(input).cols() != self.input_width {
            return Err(Error::config(format!(
                "mlp input width {} does not match first layer {}",
                g.value(input).cols(),
                self.input_width
            )));
        }
        let last = self.weights.len() - 1;
        let mut x = input;
        for (l, (&w, &b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let y = g.affine(x, w, b)?;
            x = if l < last {
                g.relu(y)
            } else {
                match self.output {
                    OutputActivation::Linear => y,
                    OutputActivation::Sigmoid => g.sigmoid(y),
                }
            };
        }
        Ok(x)
    }

    /// Gradients in the same order as [`Mlp::params`].
    pub fn grads<S: Scalar>(&self, mlp: &Mlp<S>, grads: &Gradients<S>) -> Vec<Tensor<S>> {
        self.weights
            .iter()
            .zip(&self.biases)
            .zip(mlp.weights.iter().zip(&mlp.biases))
            .flat_map(|((&wv, &bv), (w, b))| [grads.get_or_zeros(wv, w.shape()), grads.get_or_zeros(bv, b.shape())])
            .collect()
    }
}
