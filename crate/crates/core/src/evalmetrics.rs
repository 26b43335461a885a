//! SINR, overhead-discounted weighted sum-rate and signaling overhead.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Transmit power scale and receiver noise, both in mW.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkBudget<S> {
    pub max_power: S,
    pub noise: S,
}

/// `xi_i = P p_i g_ii / (sum_{j != i} P p_j g_ji + noise)` with `gains[j * k + i] = g_ji`.
pub fn sinr<S: Scalar>(p: &[S], gains: &[S], budget: LinkBudget<S>) -> Vec<S> {
    let k = p.len();
    assert_eq!(gains.len(), k * k, "gain matrix must be k x k");
    (0..k)
        .map(|i| {
            let mut interference = budget.noise;
            for (j, &pj) in p.iter().enumerate() {
                if j != i {
                    interference += budget.max_power * pj * gains[j * k + i];
                }
            }
            budget.max_power * p[i] * gains[i * k + i] / interference
        })
        .collect()
}

/// `efficiency * sum_i w_i log2(1 + xi_i)` in bps/Hz.
pub fn weighted_sum_rate<S: Scalar>(p: &[S], gains: &[S], weights: &[S], budget: LinkBudget<S>, efficiency: S) -> S {
    let rates = sinr(p, gains, budget);
    let total: S = rates.iter().zip(weights).map(|(&x, &w)| w * (S::one() + x).log2()).sum();
    efficiency * total
}

/// `max(0, (N_S - N_O) / N_S)`.
pub fn rate_prefactor(overhead: u64, frame_symbols: u64) -> f64 {
    if overhead >= frame_symbols {
        0.0
    } else {
        (frame_symbols - overhead) as f64 / frame_symbols as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Epa,
    Wmmse,
    Mpnn,
    AirMpnn,
    AirMprnn,
    AirWmmse,
}

impl Scheme {
    pub const ALL: [Scheme; 6] =
        [Scheme::Epa, Scheme::Wmmse, Scheme::Mpnn, Scheme::AirMpnn, Scheme::AirMprnn, Scheme::AirWmmse];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Epa => "epa",
            Scheme::Wmmse => "wmmse",
            Scheme::Mpnn => "mpnn",
            Scheme::AirMpnn => "air-mpnn",
            Scheme::AirMprnn => "air-mprnn",
            Scheme::AirWmmse => "air-wmmse",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::usage(format!("unknown scheme {s:?}; expected one of epa, wmmse, mpnn, air-mpnn, air-mprnn, air-wmmse")))
    }
}

/// Symbol budget of one frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverheadConfig {
    /// Symbols per CSI estimation or pilot broadcast.
    pub csi_symbols: u64,
    /// Symbols per embedding broadcast.
    pub mp_symbols: u64,
    pub frame_symbols: u64,
    /// Message-passing layers of the non-recurrent GNNs.
    pub layers: u64,
}

impl Default for OverheadConfig {
    fn default() -> Self {
        Self { csi_symbols: 1, mp_symbols: 5, frame_symbols: 3000, layers: 3 }
    }
}

impl OverheadConfig {
    /// No signaling cost at all, for overhead-free comparisons.
    pub fn free(frame_symbols: u64) -> Self {
        Self { csi_symbols: 0, mp_symbols: 0, frame_symbols, layers: 3 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_symbols == 0 {
            return Err(Error::config("a frame needs at least one symbol"));
        }
        if self.layers == 0 {
            return Err(Error::config("at least one message-passing layer is required"));
        }
        Ok(())
    }

    pub fn symbols(&self, scheme: Scheme, k: u64) -> u64 {
        let (csi, mp, n) = (self.csi_symbols, self.mp_symbols, self.layers);
        match scheme {
            Scheme::Epa => 0,
            Scheme::Wmmse => k * k * csi,
            Scheme::Mpnn => k * k * csi + n * k * mp,
            Scheme::AirMpnn => (n + 1) * k * csi,
            Scheme::AirMprnn => k * csi,
            Scheme::AirWmmse => 3 * k * csi,
        }
    }

    /// `N_O / N_S`, uncapped.
    pub fn ratio(&self, scheme: Scheme, k: u64) -> f64 {
        self.symbols(scheme, k) as f64 / self.frame_symbols as f64
    }

    pub fn prefactor(&self, scheme: Scheme, k: u64) -> f64 {
        rate_prefactor(self.symbols(scheme, k), self.frame_symbols)
    }
}

/// Ratio as a percentage with one decimal, e.g. `"13.3%"`; zero prints as `"0"`.
pub fn format_percent(ratio: f64) -> String {
    if ratio == 0.0 {
        "0".to_string()
    } else {
        format!("{:.1}%", ratio * 100.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: LinkBudget<f64> = LinkBudget { max_power: 1.0, noise: 1.0 };

    #[test]
    fn sinr_by_substitution() {
        // g11 = 10, g21 = 4 relative to noise
        let g = [10.0, 0.0, 4.0, 1.0];
        let x = sinr(&[1.0, 1.0], &g, UNIT);
        assert!((x[0] - 2.0).abs() < 1e-15);
        assert_eq!(sinr(&[0.0, 1.0], &g, UNIT)[0], 0.0);
        let b = LinkBudget { max_power: 1e4, noise: 6.3e-11 };
        let one: f64 = sinr(&[1.0], &[2e-9], b)[0];
        assert!((one - 1e4 * 2e-9 / 6.3e-11).abs() < 1e-9);
    }

    #[test]
    fn rate_of_single_link() {
        let r = weighted_sum_rate(&[1.0], &[3.0], &[1.0], UNIT, 1.0);
        assert!((r - 2.0).abs() < 1e-15);
        assert_eq!(weighted_sum_rate(&[1.0], &[3.0], &[1.0], UNIT, rate_prefactor(10, 10)), 0.0);
    }

    #[test]
    fn rate_works_in_single_precision() {
        let b = LinkBudget { max_power: 1.0f32, noise: 1.0 };
        assert!((weighted_sum_rate(&[1.0f32], &[3.0], &[1.0], b, 1.0) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn table_three_overheads() {
        let cfg = OverheadConfig::default();
        let got: Vec<String> = [Scheme::Epa, Scheme::Wmmse, Scheme::Mpnn, Scheme::AirMpnn, Scheme::AirMprnn]
            .iter()
            .map(|&s| format_percent(cfg.ratio(s, 20)))
            .collect();
        assert_eq!(got, ["0", "13.3%", "23.3%", "2.7%", "0.7%"]);
        assert_eq!(cfg.symbols(Scheme::Mpnn, 20), 700);
        assert_eq!(OverheadConfig { csi_symbols: 1, ..cfg }.symbols(Scheme::AirWmmse, 20), 60);
    }

    #[test]
    fn heavy_overhead_clamps_to_zero() {
        let cfg = OverheadConfig { csi_symbols: 2, mp_symbols: 20, ..Default::default() };
        assert_eq!(cfg.symbols(Scheme::Mpnn, 30), 3600);
        assert_eq!(cfg.prefactor(Scheme::Mpnn, 30), 0.0);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!(matches!("ppo".parse::<Scheme>(), Err(Error::Usage(_))));
    }
}
