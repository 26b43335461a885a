use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Adam moments for a fixed list of parameter tensors.
#[derive(Clone, Debug)]
pub struct AdamState<S> {
    first: Vec<Tensor<S>>,
    second: Vec<Tensor<S>>,
    step: u64,
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
}

impl<S: Scalar> AdamState<S> {
    /// Zero moments shaped like `params`, with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor<S>>) -> Self {
        let first: Vec<_> = params.into_iter().map(|p| Tensor::zeros(p.rows(), p.cols())).collect();
        let second = first.clone();
        Self { first, second, step: 0, beta1: S::of(0.9), beta2: S::of(0.999), eps: S::of(1e-8) }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update, `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step<'a>(
        &mut self,
        params: impl IntoIterator<Item = &'a mut Tensor<S>>,
        grads: &[Tensor<S>],
        lr: S,
    ) -> Result<()> {
        let params: Vec<&mut Tensor<S>> = params.into_iter().collect();
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::config(format!(
                "adam: {} moments, {} params, {} grads",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.first) {
            if p.shape() != m.shape() || g.shape() != m.shape() {
                return Err(Error::config(format!("adam: shape {:?} vs {:?}", p.shape(), m.shape())));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = S::one() - b1.powi(t);
        let c2 = S::one() - b2.powi(t);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.first).zip(&mut self.second) {
            for (((pv, &gv), mv), vv) in
                p.data_mut().iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut())
            {
                *mv = b1 * *mv + (S::one() - b1) * gv;
                *vv = b2 * *vv + (S::one() - b2) * gv * gv;
                let m_hat = *mv / c1;
                let v_hat = *vv / c2;
                *pv -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut p = Tensor::column(vec![1.0, -2.0, 3.0]);
        let before = p.clone();
        let mut adam = AdamState::new([&p]);
        adam.step([&mut p], &[Tensor::zeros(3, 1)], 0.1).unwrap();
        assert_eq!(p, before);
        assert_eq!(adam.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [1e-6_f64, 0.3, 250.0] {
            let mut p = Tensor::column(vec![0.0, 0.0]);
            let mut adam = AdamState::new([&p]);
            adam.step([&mut p], &[Tensor::column(vec![g, -g])], 0.002).unwrap();
            // |m_hat / (sqrt(v_hat) + eps)| = |g| / (|g| + eps)
            let expect = 0.002 * g / (g + 1e-8);
            assert!((p.data()[0] + expect).abs() < 1e-15);
            assert!((p.data()[1] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_gradient_moves_monotonically_against_its_sign() {
        let mut p = Tensor::scalar(1.0);
        let mut adam = AdamState::new([&p]);
        let mut last = p.data()[0];
        for _ in 0..2 {
            adam.step([&mut p], &[Tensor::scalar(0.7)], 0.01).unwrap();
            assert!(p.data()[0] < last);
            last = p.data()[0];
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = Tensor::column(vec![0.0, 0.0]);
        let mut adam = AdamState::new([&p]);
        assert!(adam.step([&mut p], &[Tensor::zeros(3, 1)], 0.1).is_err());
    }
}
