//! Minimal reverse-mode automatic differentiation: dense tensors, a recording
//! tape, multilayer perceptrons and the Adam optimizer.

mod adam;
mod graph;
mod kernels;
mod mlp;
mod tensor;

pub use adam::AdamState;
pub use graph::{sigmoid, Gradients, Graph, Index, Var};
pub use mlp::{BoundMlp, HiddenActivation, Mlp, OutputActivation};
pub use tensor::Tensor;

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::error::Error;

    /// Central differences of `f` with respect to every entry of `x`.
    fn finite_diff(x: &Tensor<f64>, h: f64, f: impl Fn(&Tensor<f64>) -> f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut plus = x.clone();
                plus.data_mut()[i] += h;
                let mut minus = x.clone();
                minus.data_mut()[i] -= h;
                (f(&plus) - f(&minus)) / (2.0 * h)
            })
            .collect()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
    }

    #[test]
    fn sigmoid_derivative_at_zero() {
        let mut g = Graph::new();
        let x = g.param(Tensor::scalar(0.0));
        let y = g.sigmoid(x);
        let grads = g.backward(y).unwrap();
        assert_eq!(grads.get(x).unwrap().item(), Some(0.25));
        assert!(g.is_empty(), "tape is cleared after backward");
    }

    #[test]
    fn sum_of_squares_gradient_is_twice_the_matrix() {
        let w = Tensor::from_vec(2, 3, vec![1.0, -2.0, 0.5, 3.0, 0.0, -1.5]).unwrap();
        let mut g = Graph::new();
        let wv = g.param(w.clone());
        let sq = g.mul(wv, wv).unwrap();
        let loss = g.sum(sq);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(wv).unwrap(), &w.map(|v| 2.0 * v));
    }

    #[test]
    fn non_scalar_loss_is_a_usage_error() {
        let mut g = Graph::new();
        let x = g.param(Tensor::column(vec![1.0, 2.0]));
        assert!(matches!(g.backward(x), Err(Error::Usage(_))));
    }

    #[test]
    fn non_finite_forward_is_reported() {
        let mut g = Graph::new();
        let x = g.param(Tensor::scalar(0.0));
        let y = g.ln(x);
        let loss = g.sum(y);
        assert_eq!(g.non_finite(), Some("ln"));
        assert!(matches!(g.backward(loss), Err(Error::NonFinite { op: "ln" })));
    }

    #[test]
    fn random_mlp_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mlp = Mlp::<f64>::new(&[5, 8, 6, 2], OutputActivation::Sigmoid, &mut rng).unwrap();
        let x = Tensor::from_vec(4, 5, (0..20).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();

        let mut g = Graph::new();
        let bound = mlp.bind(&mut g);
        let xv = g.param(x.clone());
        let y = bound.apply(&mut g, xv).unwrap();
        let loss = g.sum(y);
        let grads = g.backward(loss).unwrap();
        let analytic = bound.grads(&mlp, &grads);

        for (pi, grad) in analytic.iter().enumerate() {
            let base: Vec<Tensor<f64>> = mlp.params().cloned().collect();
            let numeric = finite_diff(&base[pi], 1e-5, |p| {
                let mut m = mlp.clone();
                *m.params_mut().nth(pi).unwrap() = p.clone();
                m.forward(&x).unwrap().data().iter().sum()
            });
            for (a, n) in grad.data().iter().zip(numeric) {
                assert!(rel_err(*a, n) < 1e-5, "param {pi}: {a} vs {n}");
            }
        }
        let numeric = finite_diff(&x, 1e-5, |xx| mlp.forward(xx).unwrap().data().iter().sum());
        for (a, n) in grads.get(xv).unwrap().data().iter().zip(numeric) {
            assert!(rel_err(*a, n) < 1e-5);
        }
    }

    #[test]
    fn forward_and_gradients_are_deterministic() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let mlp = Mlp::<f64>::new(&[3, 4, 1], OutputActivation::Linear, &mut rng).unwrap();
            let mut g = Graph::new();
            let bound = mlp.bind(&mut g);
            let x = g.constant(Tensor::from_vec(2, 3, vec![0.1, 0.2, 0.3, -0.4, 0.5, -0.6]).unwrap());
            let y = bound.apply(&mut g, x).unwrap();
            let out = g.value(y).clone();
            let loss = g.sum(y);
            let grads = g.backward(loss).unwrap();
            (out, bound.grads(&mlp, &grads))
        };
        assert_eq!(run(), run());
    }

    /// Every op composed into one scalar: matmul, affine, add, sub, mul, div,
    /// add_row, mul_col, scale, add_scalar, relu, sigmoid, ln/log2, sum, mean,
    /// concat, slice, gather, segment sum and max.
    fn composite(g: &mut Graph<f64>, a: Var, b: Var, c: Var, index: &Index, seg: &Index) -> Var {
        let ab = g.matmul(a, b).unwrap(); // 4x3
        let bias = g.slice_cols(c, 0, 3).unwrap();
        let bias = g.gather_rows(bias, &std::rc::Rc::from(vec![0usize])).unwrap(); // 1x3
        let aff = g.affine(a, b, bias).unwrap();
        let s = g.add(ab, aff).unwrap();
        let s = g.add_row(s, bias).unwrap();
        let r = g.relu(s);
        let sg = g.sigmoid(ab);
        let m = g.mul(r, sg).unwrap();
        let pos = g.add_scalar(sg, 0.5);
        let d = g.div(m, pos).unwrap();
        let dd = g.sub(d, sg).unwrap();
        let col = g.slice_cols(ab, 1, 1).unwrap();
        let mc = g.mul_col(dd, col).unwrap();
        let cat = g.concat_cols(&[mc, sg]).unwrap(); // 4x6
        let gathered = g.gather_rows(cat, index).unwrap();
        let ssum = g.segment_sum(gathered, seg, 3).unwrap();
        let smax = g.segment_max(gathered, seg, 3).unwrap();
        let both = g.add(ssum, smax).unwrap();
        let sq = g.mul(both, both).unwrap();
        let lg = g.add_scalar(sq, 1.0);
        let lg = g.log2(lg);
        let t1 = g.sum(lg);
        let t2 = g.mean(both);
        let t2 = g.scale(t2, 3.0);
        let total = g.add(t1, t2).unwrap();
        let lnp = g.ln(pos);
        let t3 = g.sum(lnp);
        g.add(total, t3).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn composed_ops_pass_gradient_check(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rnd = |r, c| Tensor::from_vec(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let (a, b, c) = (rnd(4, 2), rnd(2, 3), rnd(2, 4));
            let index: Index = std::rc::Rc::from(vec![0usize, 2, 3, 1, 1, 3]);
            let seg: Index = std::rc::Rc::from(vec![0usize, 0, 1, 1, 1, 2]);

            let eval = |a: &Tensor<f64>, b: &Tensor<f64>, c: &Tensor<f64>| {
                let mut g = Graph::new();
                let (av, bv, cv) = (g.constant(a.clone()), g.constant(b.clone()), g.constant(c.clone()));
                let out = composite(&mut g, av, bv, cv, &index, &seg);
                g.value(out).item().unwrap()
            };

            let mut g = Graph::new();
            let (av, bv, cv) = (g.param(a.clone()), g.param(b.clone()), g.param(c.clone()));
            let out = composite(&mut g, av, bv, cv, &index, &seg);
            let grads = g.backward(out).unwrap();

            let checks = [
                (grads.get_or_zeros(av, a.shape()), finite_diff(&a, 1e-5, |x| eval(x, &b, &c))),
                (grads.get_or_zeros(bv, b.shape()), finite_diff(&b, 1e-5, |x| eval(&a, x, &c))),
                (grads.get_or_zeros(cv, c.shape()), finite_diff(&c, 1e-5, |x| eval(&a, &b, x))),
            ];
            for (analytic, numeric) in checks {
                for (x, y) in analytic.data().iter().zip(numeric) {
                    // relu/max kinks are measure-zero but a 1e-5 step can straddle one
                    prop_assert!(rel_err(*x, y) < 1e-5 || (x - y).abs() < 1e-7, "{x} vs {y}");
                }
            }
        }
    }
}
