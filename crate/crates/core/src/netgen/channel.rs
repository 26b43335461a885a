use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::gains::GainMatrix;
use crate::error::{Error, Result};

/// Block-fading channel of one layout over `frames` frames.
///
/// Small-scale states follow `h(t+1) = rho h(t) + b(t)` with `b ~ CN(0, 1 - rho^2)`
/// and `h(0) ~ CN(0, 1)`. Power gains are always formed as `g_ls * |h_ss|^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelEpisode {
    k: usize,
    frames: usize,
    rho: f64,
    large_scale: GainMatrix,
    small_scale: Vec<Complex64>,
}

/// Draws one `CN(0, 1)` sample.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn evolve_episode(large_scale: &GainMatrix, rho: f64, frames: usize, seed: u64) -> Result<ChannelEpisode> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::domain(format!("correlation coefficient must lie in [0, 1), got {rho}")));
    }
    if frames == 0 {
        return Err(Error::config("episode needs at least one frame"));
    }
    if large_scale.data().iter().any(|&g| !(g > 0.0)) {
        return Err(Error::domain("large-scale gains must be strictly positive"));
    }
    let k = large_scale.k();
    let n = k * k;
    let innovation = (1.0 - rho * rho).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut small_scale = Vec::with_capacity(frames * n);
    for _ in 0..n {
        small_scale.push(complex_normal(&mut rng));
    }
    for t in 1..frames {
        for e in 0..n {
            let prev = small_scale[(t - 1) * n + e];
            small_scale.push(prev * rho + complex_normal(&mut rng) * innovation);
        }
    }
    Ok(ChannelEpisode { k, frames, rho, large_scale: large_scale.clone(), small_scale })
}

impl ChannelEpisode {
    pub fn from_parts(rho: f64, large_scale: GainMatrix, frames: usize, small_scale: Vec<Complex64>) -> Result<Self> {
        let k = large_scale.k();
        if small_scale.len() != frames * k * k {
            return Err(Error::data(format!(
                "episode with {frames} frames and {k} pairs needs {} states, got {}",
                frames * k * k,
                small_scale.len()
            )));
        }
        Ok(Self { k, frames, rho, large_scale, small_scale })
    }

    pub fn pairs(&self) -> usize {
        self.k
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn large_scale(&self) -> &GainMatrix {
        &self.large_scale
    }

    pub fn small_scale(&self, t: usize, tx: usize, rx: usize) -> Complex64 {
        self.small_scale[(t * self.k + tx) * self.k + rx]
    }

    pub fn small_scale_frame(&self, t: usize) -> &[Complex64] {
        let n = self.k * self.k;
        &self.small_scale[t * n..(t + 1) * n]
    }

    /// Complex coefficient `sqrt(g_ls) h_ss` from `tx` to `rx` in frame `t`.
    pub fn coefficient(&self, t: usize, tx: usize, rx: usize) -> Complex64 {
        self.small_scale(t, tx, rx) * self.large_scale.get(tx, rx).sqrt()
    }

    pub fn power_gain(&self, t: usize, tx: usize, rx: usize) -> f64 {
        self.large_scale.get(tx, rx) * self.small_scale(t, tx, rx).norm_sqr()
    }

    pub fn power_gains(&self, t: usize) -> GainMatrix {
        GainMatrix::from_fn(self.k, |j, i| self.power_gain(t, j, i))
    }

    /// All `k * k` coefficients of frame `t`, indexed `tx * k + rx`.
    pub fn coefficients(&self, t: usize) -> Vec<Complex64> {
        let k = self.k;
        (0..k * k).map(|e| self.coefficient(t, e / k, e % k)).collect()
    }

    /// Coefficients arriving at receiver `rx` from every transmitter.
    pub fn column(&self, t: usize, rx: usize) -> Vec<Complex64> {
        (0..self.k).map(|j| self.coefficient(t, j, rx)).collect()
    }

    /// Pairs relabelled so that new pair `a` is old pair `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let k = self.k;
        let mut small_scale = Vec::with_capacity(self.small_scale.len());
        for t in 0..self.frames {
            for a in 0..k {
                for b in 0..k {
                    small_scale.push(self.small_scale(t, perm[a], perm[b]));
                }
            }
        }
        Self { k, frames: self.frames, rho: self.rho, large_scale: self.large_scale.permuted(perm), small_scale }
    }
}

/// Thermal noise power in mW for a density in dBm/Hz over `bandwidth_hz`.
pub fn noise_power_mw(psd_dbm_per_hz: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) {
        return Err(Error::domain(format!("bandwidth must be positive, got {bandwidth_hz}")));
    }
    Ok(dbm_to_mw(psd_dbm_per_hz + 10.0 * bandwidth_hz.log10()))
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> GainMatrix {
        GainMatrix::from_fn(1, |_, _| 1.0)
    }

    /// Lag-1 autocorrelation of the real part of a single-link state sequence.
    fn lag1(ep: &ChannelEpisode) -> f64 {
        let xs: Vec<f64> = (0..ep.frames()).map(|t| ep.small_scale(t, 0, 0).re).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let cov = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / (n - 1.0);
        cov / var
    }

    #[test]
    fn independent_frames_when_uncorrelated() {
        let ep = evolve_episode(&unit(), 0.0, 100_000, 1).unwrap();
        assert!(lag1(&ep).abs() < 0.01);
    }

    #[test]
    fn strong_correlation_is_reproduced() {
        let ep = evolve_episode(&unit(), 0.99, 100_000, 2).unwrap();
        assert!((lag1(&ep) - 0.99).abs() < 0.02);
    }

    #[test]
    fn stationary_unit_power_in_every_frame() {
        // 317^2 > 1e5 independent links per frame
        let g = GainMatrix::from_fn(317, |_, _| 1.0);
        for rho in [0.0, 0.5, 0.99] {
            let ep = evolve_episode(&g, rho, 4, 3).unwrap();
            for t in 0..4 {
                let frame = ep.small_scale_frame(t);
                let mean = frame.iter().map(|h| h.norm_sqr()).sum::<f64>() / frame.len() as f64;
                assert!((mean - 1.0).abs() < 0.02, "rho {rho}, frame {t}: {mean}");
            }
        }
    }

    #[test]
    fn power_gain_composition_is_exact() {
        let g = GainMatrix::from_fn(3, |j, i| 1e-7 * (1 + j + 2 * i) as f64);
        let ep = evolve_episode(&g, 0.7, 4, 5).unwrap();
        for t in 0..4 {
            for j in 0..3 {
                for i in 0..3 {
                    assert_eq!(ep.power_gain(t, j, i), g.get(j, i) * ep.small_scale(t, j, i).norm_sqr());
                    let rel = (ep.coefficient(t, j, i).norm_sqr() - ep.power_gain(t, j, i)).abs() / ep.power_gain(t, j, i);
                    assert!(rel < 1e-14);
                }
            }
        }
    }

    #[test]
    fn seeded_episodes_are_reproducible() {
        let g = GainMatrix::from_fn(4, |_, _| 1e-9);
        assert_eq!(evolve_episode(&g, 0.3, 5, 8).unwrap(), evolve_episode(&g, 0.3, 5, 8).unwrap());
    }

    #[test]
    fn correlation_outside_unit_interval_is_rejected() {
        assert!(matches!(evolve_episode(&unit(), 1.0, 3, 0), Err(Error::Domain(_))));
        assert!(evolve_episode(&unit(), -0.1, 3, 0).is_err());
    }

    #[test]
    fn noise_power_values() {
        let n = noise_power_mw(-169.0, 5e6).unwrap();
        assert!((mw_to_dbm(n) - (-169.0 + 66.98970004336019)).abs() < 1e-9);
        assert!((n - 6.3e-11).abs() < 0.05e-11);
        assert!((noise_power_mw(0.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let ratio = noise_power_mw(-169.0, 10e6).unwrap() / n;
        assert!((10.0 * ratio.log10() - 3.0103).abs() < 1e-4);
        assert!(noise_power_mw(-169.0, 0.0).is_err());
    }
}
