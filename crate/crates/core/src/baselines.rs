//! Reference power-control policies: full power, WMMSE and its one-shot
//! over-the-air variant.
//!
//! WMMSE runs in the SNR-normalized domain: with `c = P / noise`, the gain
//! `c g_ji` and the amplitude `v in [0, 1]` give the same SINRs as the
//! physical units, and `p = v^2`.

use num_complex::Complex64;

use crate::airphy::Execution;
use crate::error::{Error, Result};
use crate::evalmetrics::{weighted_sum_rate, LinkBudget};
use crate::netgen::GainMatrix;

/// Equal (maximum) power allocation.
pub fn epa(k: usize) -> Vec<f64> {
    vec![1.0; k]
}

/// Block-coordinate WMMSE iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct WmmseState {
    /// Normalized amplitudes, `v_i^2 = p_i`.
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct Wmmse {
    k: usize,
    /// `c g_ji`, tx-major.
    snr: Vec<f64>,
    /// `sqrt(c g_ii)`.
    direct: Vec<f64>,
    weights: Vec<f64>,
    state: WmmseState,
}

impl Wmmse {
    /// Starts from full power on every link.
    pub fn new(gains: &GainMatrix, weights: &[f64], budget: LinkBudget<f64>) -> Result<Self> {
        let k = gains.k();
        if weights.len() != k {
            return Err(Error::config(format!("{} weights for {k} links", weights.len())));
        }
        if !(budget.noise > 0.0) || !(budget.max_power > 0.0) {
            return Err(Error::Degenerate("WMMSE needs positive noise and power".into()));
        }
        if (0..k).any(|i| !(gains.direct(i) > 0.0)) {
            return Err(Error::Degenerate("direct gains must be positive".into()));
        }
        let c = budget.max_power / budget.noise;
        let snr: Vec<f64> = gains.data().iter().map(|g| g * c).collect();
        let direct = (0..k).map(|i| snr[i * k + i].sqrt()).collect();
        let state = WmmseState { v: vec![1.0; k], u: vec![0.0; k], w: vec![0.0; k], iterations: 0 };
        Ok(Self { k, snr, direct, weights: weights.to_vec(), state })
    }

    pub fn state(&self) -> &WmmseState {
        &self.state
    }

    pub fn powers(&self) -> Vec<f64> {
        self.state.v.iter().map(|v| v * v).collect()
    }

    /// One u-, w- and v-update.
    pub fn step(&mut self) -> Result<()> {
        let k = self.k;
        let WmmseState { v, u, w, .. } = &mut self.state;
        for i in 0..k {
            let received: f64 = (0..k).map(|j| self.snr[j * k + i] * v[j] * v[j]).sum::<f64>() + 1.0;
            u[i] = self.direct[i] * v[i] / received;
            w[i] = 1.0 / (1.0 - u[i] * self.direct[i] * v[i]);
        }
        for j in 0..k {
            let denom: f64 = (0..k).map(|i| self.weights[i] * w[i] * u[i] * u[i] * self.snr[j * k + i]).sum();
            let num = self.weights[j] * w[j] * u[j] * self.direct[j];
            v[j] = if denom > 0.0 { (num / denom).clamp(0.0, 1.0) } else { 1.0 };
        }
        if v.iter().chain(u.iter()).chain(w.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { op: "wmmse" });
        }
        self.state.iterations += 1;
        Ok(())
    }

    pub fn run(&mut self, iterations: usize) -> Result<Vec<f64>> {
        for _ in 0..iterations {
            self.step()?;
        }
        Ok(self.powers())
    }
}

/// `iterations` WMMSE updates from full power; returns `p in [0, 1]^K`.
pub fn wmmse(gains: &GainMatrix, weights: &[f64], budget: LinkBudget<f64>, iterations: usize) -> Result<Vec<f64>> {
    Wmmse::new(gains, weights, budget)?.run(iterations)
}

/// One WMMSE iteration from full power whose interference sums come from two
/// simultaneous pilot rounds: transmitters at `P v^2`, then receivers at
/// `alpha w u^2` over the reciprocal channel. Each transmitter additionally
/// learns `alpha w` of its own receiver. `coeffs[j * k + i]` is `h_ji`.
pub fn air_wmmse(coeffs: &[Complex64], weights: &[f64], budget: LinkBudget<f64>, exec: Execution<'_>) -> Result<Vec<f64>> {
    let k = weights.len();
    if coeffs.len() != k * k {
        return Err(Error::config(format!("{} coefficients for {k} links", coeffs.len())));
    }
    let gains = GainMatrix::from_fn(k, |j, i| coeffs[j * k + i].norm_sqr());
    let ch = match exec {
        Execution::Ideal => return wmmse(&gains, weights, budget, 1),
        Execution::Physical(ch) => ch,
    };
    Wmmse::new(&gains, weights, budget)?;
    let p_max = budget.max_power;
    let v = vec![p_max.sqrt(); k];

    let forward = ch.broadcast(&v.iter().map(|a| a * a).collect::<Vec<_>>(), |j, i| coeffs[j * k + i])?;
    let mut u = vec![0.0; k];
    let mut w = vec![0.0; k];
    for (i, y) in forward.iter().enumerate() {
        let own = y.projection_power(ch.bank().sequence(i)).sqrt();
        let received = ch.sum_estimate(y) + own * own + budget.noise;
        u[i] = own / received;
        w[i] = 1.0 / (1.0 - u[i] * own);
    }

    let reverse_power: Vec<f64> = (0..k).map(|i| weights[i] * w[i] * u[i] * u[i]).collect();
    let backward = ch.broadcast(&reverse_power, |i, j| coeffs[j * k + i])?;
    let mut p = vec![0.0; k];
    for (j, z) in backward.iter().enumerate() {
        let own = z.projection_power(ch.bank().sequence(j));
        let denom = ch.sum_estimate(z) + own;
        // alpha w u h_jj = sqrt(own * alpha w)
        let num = (own * weights[j] * w[j]).sqrt();
        let amp = if denom > 0.0 { (num / denom).clamp(0.0, p_max.sqrt()) } else { p_max.sqrt() };
        p[j] = amp * amp / p_max;
    }
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { op: "air-wmmse" });
    }
    Ok(p)
}

/// Exhaustive search over `levels` evenly spaced powers per link in `[0, 1]`.
pub fn grid_search(gains: &GainMatrix, weights: &[f64], budget: LinkBudget<f64>, levels: usize) -> (Vec<f64>, f64) {
    let k = gains.k();
    let grid: Vec<f64> = (0..levels).map(|l| l as f64 / (levels - 1) as f64).collect();
    let mut idx = vec![0usize; k];
    let mut best = (vec![0.0; k], f64::NEG_INFINITY);
    loop {
        let p: Vec<f64> = idx.iter().map(|&l| grid[l]).collect();
        let r = weighted_sum_rate(&p, gains.data(), weights, budget, 1.0);
        if r > best.1 {
            best = (p, r);
        }
        let mut d = 0;
        loop {
            if d == k {
                return best;
            }
            idx[d] += 1;
            if idx[d] < levels {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airphy::{AirChannel, PilotBank};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const B: LinkBudget<f64> = LinkBudget { max_power: 1.0, noise: 1.0 };

    /// Rayleigh-faded SNRs, direct mean 10 dB, cross mean -10 dB.
    fn random_gains(k: usize, rng: &mut ChaCha8Rng) -> GainMatrix {
        GainMatrix::from_fn(k, |j, i| {
            let mean = if i == j { 10.0 } else { 0.1 };
            let e: f64 = rng.sample(rand_distr::Exp1);
            mean * e
        })
    }

    fn rate(p: &[f64], g: &GainMatrix) -> f64 {
        weighted_sum_rate(p, g.data(), &vec![1.0; g.k()], B, 1.0)
    }

    #[test]
    fn single_link_uses_full_power() {
        let g = GainMatrix::from_fn(1, |_, _| 3.0);
        assert_eq!(wmmse(&g, &[1.0], B, 100).unwrap(), vec![1.0]);
        assert_eq!(epa(3), vec![1.0; 3]);
        let (best, _) = grid_search(&g, &[1.0], B, 101);
        assert_eq!(best, vec![1.0]);
    }

    #[test]
    fn sum_rate_never_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let k = rng.random_range(2..8);
            let g = random_gains(k, &mut rng);
            let mut s = Wmmse::new(&g, &vec![1.0; k], B).unwrap();
            let mut last = rate(&s.powers(), &g);
            for _ in 0..100 {
                s.step().unwrap();
                let r = rate(&s.powers(), &g);
                assert!(r >= last - 1e-9, "{r} < {last}");
                last = r;
            }
        }
    }

    #[test]
    fn strong_interference_switches_one_link_off() {
        // exact symmetry is a fixed point of the iteration; 1% breaks the tie
        let g = GainMatrix::from_fn(2, |j, i| match (j, i) {
            (0, 0) => 100.0,
            (1, 1) => 99.0,
            _ => 1000.0,
        });
        let p = wmmse(&g, &[1.0, 1.0], B, 100).unwrap();
        let (_, best) = grid_search(&g, &[1.0, 1.0], B, 101);
        assert!(rate(&p, &g) >= 0.98 * best);
        let (hi, lo) = if p[0] > p[1] { (p[0], p[1]) } else { (p[1], p[0]) };
        assert!(hi > 0.99 && lo < 0.01, "{p:?}");
    }

    #[test]
    fn close_to_grid_optimum_on_small_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for k in [2, 3] {
            for _ in 0..10 {
                let g = random_gains(k, &mut rng);
                let p = wmmse(&g, &vec![1.0; k], B, 100).unwrap();
                let (_, best) = grid_search(&g, &vec![1.0; k], B, 21);
                assert!(rate(&p, &g) >= 0.98 * best);
            }
        }
    }

    #[test]
    fn converged_state_is_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_gains(4, &mut rng);
        let mut s = Wmmse::new(&g, &[1.0; 4], B).unwrap();
        let p = s.run(3000).unwrap();
        let q = s.run(1).unwrap();
        assert!(p.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn noiseless_air_iteration_matches_ideal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let budget = LinkBudget { max_power: 1e4, noise: 6.3e-11 };
        for k in [1, 3, 6] {
            let coeffs: Vec<Complex64> = (0..k * k)
                .map(|e| {
                    let scale: f64 = if e / k == e % k { 1e-10 } else { 1e-12 };
                    Complex64::from_polar((scale * rng.random_range(0.1..1.0)).sqrt(), rng.random_range(0.0..6.28))
                })
                .collect();
            let w = vec![1.0; k];
            let ideal = air_wmmse(&coeffs, &w, budget, Execution::Ideal).unwrap();
            let mut ch = AirChannel::new(PilotBank::new(k, k, 1).unwrap(), 0.0, false, 0);
            let air = air_wmmse(&coeffs, &w, budget, Execution::Physical(&mut ch)).unwrap();
            assert_eq!(ch.broadcasts(), 2);
            for (a, b) in ideal.iter().zip(&air) {
                assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12), "{a} vs {b}");
            }
            if k == 1 {
                assert!((air[0] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_inputs_are_reported() {
        let g = GainMatrix::from_fn(2, |j, i| if i == j { 0.0 } else { 1.0 });
        assert!(matches!(wmmse(&g, &[1.0, 1.0], B, 1), Err(Error::Degenerate(_))));
        let g = GainMatrix::from_fn(1, |_, _| 1.0);
        let silent = LinkBudget { max_power: 1.0, noise: 0.0 };
        assert!(matches!(wmmse(&g, &[1.0], silent, 1), Err(Error::Degenerate(_))));
    }
}
