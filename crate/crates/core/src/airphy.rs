//! Orthogonal pilots and over-the-air estimation of received interference.
//!
//! Every node broadcasts its own pilot `s_j` at power `q_j` simultaneously, so
//! node `i` observes `y_i = sum_j sqrt(q_j) h_ji s_j + n_i`. Projections onto the
//! bank recover per-sender received powers; the energy of `y_i` minus its own
//! projection is the total interference.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::complex_normal;

/// `k` orthonormal complex sequences of length `len`.
#[derive(Clone, Debug, PartialEq)]
pub struct PilotBank {
    len: usize,
    sequences: Vec<Vec<Complex64>>,
}

impl PilotBank {
    /// Orthonormalizes `k` Gaussian vectors; two Gram–Schmidt passes keep
    /// the Gram matrix within 1e-12 of identity.
    pub fn new(k: usize, len: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("pilot bank needs at least one sequence"));
        }
        if len < k {
            return Err(Error::config(format!("{k} orthogonal pilots need length >= {k}, got {len}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sequences: Vec<Vec<Complex64>> = Vec::with_capacity(k);
        while sequences.len() < k {
            let mut v: Vec<Complex64> = (0..len).map(|_| complex_normal(&mut rng)).collect();
            for _ in 0..2 {
                for s in &sequences {
                    let c = inner(s, &v);
                    for (vi, si) in v.iter_mut().zip(s) {
                        *vi -= c * si;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                v.iter_mut().for_each(|z| *z /= norm);
                sequences.push(v);
            }
        }
        Ok(Self { len, sequences })
    }

    pub fn count(&self) -> usize {
        self.sequences.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn sequence(&self, i: usize) -> &[Complex64] {
        &self.sequences[i]
    }

    /// Bank whose sequence `a` is this bank's sequence `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self { len: self.len, sequences: perm.iter().map(|&j| self.sequences[j].clone()).collect() }
    }

    /// Largest deviation of the Gram matrix from identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (a, sa) in self.sequences.iter().enumerate() {
            for (b, sb) in self.sequences.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((inner(sa, sb) - target).norm());
            }
        }
        worst
    }
}

/// `a^H b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReceivedPilot {
    pub owner: usize,
    pub samples: Vec<Complex64>,
}

impl ReceivedPilot {
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `|y^H s|^2`.
    pub fn projection_power(&self, s: &[Complex64]) -> f64 {
        inner(&self.samples, s).norm_sqr()
    }
}

/// Superimposed pilots at node `i`; `column[j]` is the coefficient from sender `j`.
pub fn receive_pilots<R: Rng + ?Sized>(
    i: usize,
    powers: &[f64],
    column: &[Complex64],
    bank: &PilotBank,
    noise: f64,
    rng: &mut R,
) -> Result<ReceivedPilot> {
    if powers.len() != column.len() || powers.len() > bank.count() {
        return Err(Error::config(format!(
            "{} powers, {} coefficients and {} pilots do not match",
            powers.len(),
            column.len(),
            bank.count()
        )));
    }
    if let Some(p) = powers.iter().find(|p| !(**p >= 0.0)) {
        return Err(Error::domain(format!("pilot power must be non-negative, got {p}")));
    }
    if !(noise >= 0.0) {
        return Err(Error::domain(format!("noise power must be non-negative, got {noise}")));
    }
    let mut samples = vec![Complex64::new(0.0, 0.0); bank.len()];
    for (j, (&p, &h)) in powers.iter().zip(column).enumerate() {
        if p == 0.0 {
            continue;
        }
        let a = h * p.sqrt();
        for (y, s) in samples.iter_mut().zip(bank.sequence(j)) {
            *y += a * s;
        }
    }
    if noise > 0.0 {
        let sd = noise.sqrt();
        for y in &mut samples {
            *y += complex_normal(rng) * sd;
        }
    }
    Ok(ReceivedPilot { owner: i, samples })
}

/// `||y||^2 - |y^H s_i|^2`: interference power at the owner of `y`.
///
/// Evaluated as the energy of `y` with its `s_i` component removed, which
/// is the same quantity for unit-norm `s_i` but avoids cancelling two large
/// terms when the direct link dominates.
pub fn air_sum_estimate(y: &ReceivedPilot, own: &[Complex64]) -> f64 {
    let c = inner(own, &y.samples);
    y.samples.iter().zip(own).map(|(v, s)| (v - c * s).norm_sqr()).sum()
}

/// As [`air_sum_estimate`], with the expected noise energy `len * noise`
/// removed (clamped at zero).
pub fn air_sum_estimate_debiased(y: &ReceivedPilot, own: &[Complex64], noise: f64) -> f64 {
    (air_sum_estimate(y, own) - y.samples.len() as f64 * noise).max(0.0)
}

/// `|y^H s_i|^2 / q_i`: the owner's direct power gain.
pub fn air_local_gain(y: &ReceivedPilot, own: &[Complex64], own_power: f64) -> Result<f64> {
    if !(own_power > 0.0) {
        return Err(Error::Estimation(format!(
            "node {} sent no pilot (power {own_power}); its direct gain is unobservable",
            y.owner
        )));
    }
    Ok(y.projection_power(own) / own_power)
}

/// Strongest single interferer seen by node `i`.
pub fn air_max_estimate(y: &ReceivedPilot, bank: &PilotBank, i: usize) -> f64 {
    (0..bank.count()).filter(|&k| k != i).map(|k| y.projection_power(bank.sequence(k))).fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    #[default]
    Sum,
    /// Sum divided by the number of broadcasting nodes `K`.
    Mean,
    Max,
}

/// Closed-form aggregate of `q_j g_ji` over `j != i`; `gains[j]` is `g_ji`.
pub fn exact_aggregate(powers: &[f64], gains: &[f64], i: usize, mode: Aggregation) -> f64 {
    let terms = powers.iter().zip(gains).enumerate().filter(|(j, _)| *j != i).map(|(_, (p, g))| p * g);
    match mode {
        Aggregation::Sum => terms.sum(),
        Aggregation::Mean => terms.sum::<f64>() / powers.len() as f64,
        Aggregation::Max => terms.fold(0.0, f64::max),
    }
}

/// How aggregates are obtained: closed form, or from simulated pilot signals.
#[derive(Debug)]
pub enum Execution<'a> {
    Ideal,
    Physical(&'a mut AirChannel),
}

/// Signal-level pilot round for a whole network, counting broadcasts.
#[derive(Clone, Debug)]
pub struct AirChannel {
    bank: PilotBank,
    noise: f64,
    debias: bool,
    rng: ChaCha8Rng,
    broadcasts: usize,
}

impl AirChannel {
    pub fn new(bank: PilotBank, noise: f64, debias: bool, seed: u64) -> Self {
        Self { bank, noise, debias, rng: ChaCha8Rng::seed_from_u64(seed), broadcasts: 0 }
    }

    pub fn bank(&self) -> &PilotBank {
        &self.bank
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Simultaneous broadcasts so far.
    pub fn broadcasts(&self) -> usize {
        self.broadcasts
    }

    /// Every node sends its pilot at `powers[j]`; `coeff(j, i)` is the
    /// channel from sender `j` to listener `i`.
    pub fn broadcast(
        &mut self,
        powers: &[f64],
        coeff: impl Fn(usize, usize) -> Complex64,
    ) -> Result<Vec<ReceivedPilot>> {
        let k = powers.len();
        self.broadcasts += 1;
        (0..k)
            .map(|i| {
                let column: Vec<Complex64> = (0..k).map(|j| coeff(j, i)).collect();
                receive_pilots(i, powers, &column, &self.bank, self.noise, &mut self.rng)
            })
            .collect()
    }

    pub fn sum_estimate(&self, y: &ReceivedPilot) -> f64 {
        let own = self.bank.sequence(y.owner);
        if self.debias {
            air_sum_estimate_debiased(y, own, self.noise)
        } else {
            air_sum_estimate(y, own)
        }
    }

    pub fn aggregate(&self, y: &ReceivedPilot, mode: Aggregation) -> f64 {
        match mode {
            Aggregation::Sum => self.sum_estimate(y),
            Aggregation::Mean => self.sum_estimate(y) / self.bank.count() as f64,
            Aggregation::Max => air_max_estimate(y, &self.bank, y.owner),
        }
    }
}
