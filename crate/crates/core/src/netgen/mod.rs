//! Layout generation, path loss and time-correlated channel episodes.

mod channel;
mod dataset;
mod gains;
mod layout;
mod pathloss;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use channel::{complex_normal, dbm_to_mw, evolve_episode, mw_to_dbm, noise_power_mw, ChannelEpisode};
pub use dataset::{Dataset, DatasetHeader};
pub use gains::GainMatrix;
pub use layout::{
    field_length_for_density_factor, generate_layout, large_scale_gains, link_density, AntennaGains,
    LinkDistanceLaw, NetworkLayout,
};
pub use pathloss::{PathLoss, SPEED_OF_LIGHT};

use crate::error::Result;

/// Per-layout correlation coefficient policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RhoRepr", into = "RhoRepr")]
pub enum RhoMode {
    /// Drawn uniformly from `[0, 1)` for every layout.
    Uniform,
    Fixed(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RhoRepr {
    Value(f64),
    Name(String),
}

impl TryFrom<RhoRepr> for RhoMode {
    type Error = String;

    fn try_from(r: RhoRepr) -> std::result::Result<Self, String> {
        match r {
            RhoRepr::Value(v) if (0.0..1.0).contains(&v) => Ok(RhoMode::Fixed(v)),
            RhoRepr::Value(v) => Err(format!("rho must lie in [0, 1), got {v}")),
            RhoRepr::Name(s) if s == "uniform" => Ok(RhoMode::Uniform),
            RhoRepr::Name(s) => Err(format!("rho must be \"uniform\" or a number, got {s:?}")),
        }
    }
}

impl From<RhoMode> for RhoRepr {
    fn from(m: RhoMode) -> Self {
        match m {
            RhoMode::Uniform => RhoRepr::Name("uniform".into()),
            RhoMode::Fixed(v) => RhoRepr::Value(v),
        }
    }
}

/// Physical and geometric settings for data generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub pairs: usize,
    pub field_length_m: f64,
    pub min_link_m: f64,
    pub max_link_m: f64,
    pub link_distance_law: LinkDistanceLaw,
    pub carrier_hz: f64,
    pub tx_height_m: f64,
    pub rx_height_m: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_per_hz: f64,
    pub max_power_dbm: f64,
    /// Gain of each antenna, dBi; a link sees the transmit plus receive gain.
    pub antenna_gain_dbi: f64,
    /// Whether interference links also see the antenna gains.
    pub cross_link_antenna_gain: bool,
    pub frames: usize,
    pub rho: RhoMode,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            pairs: 20,
            field_length_m: 500.0,
            min_link_m: 2.0,
            max_link_m: 65.0,
            link_distance_law: LinkDistanceLaw::UniformDistance,
            carrier_hz: 2.4e9,
            tx_height_m: 1.5,
            rx_height_m: 1.5,
            bandwidth_hz: 5e6,
            noise_psd_dbm_per_hz: -169.0,
            max_power_dbm: 40.0,
            antenna_gain_dbi: 2.5,
            cross_link_antenna_gain: false,
            frames: 10,
            rho: RhoMode::Uniform,
        }
    }
}

impl ChannelParams {
    pub fn pathloss(&self) -> PathLoss {
        PathLoss::new(self.carrier_hz, self.tx_height_m, self.rx_height_m)
    }

    pub fn antenna(&self) -> AntennaGains {
        let pair = 2.0 * self.antenna_gain_dbi;
        AntennaGains { direct_db: pair, cross_db: if self.cross_link_antenna_gain { pair } else { 0.0 } }
    }

    pub fn noise_mw(&self) -> f64 {
        noise_power_mw(self.noise_psd_dbm_per_hz, self.bandwidth_hz).expect("validated bandwidth")
    }

    pub fn max_power_mw(&self) -> f64 {
        dbm_to_mw(self.max_power_dbm)
    }

    pub fn link_density(&self) -> f64 {
        link_density(self.pairs, self.field_length_m)
    }

    /// Layout `index` of the dataset seeded by `seed`, with its channel episode.
    pub fn generate_episode(&self, seed: u64, index: u64) -> Result<(NetworkLayout, ChannelEpisode)> {
        let layout = generate_layout(
            self.pairs,
            self.field_length_m,
            self.min_link_m,
            self.max_link_m,
            self.link_distance_law,
            derive_seed(seed, index, 0),
        )?;
        let rho = match self.rho {
            RhoMode::Fixed(r) => r,
            RhoMode::Uniform => ChaCha8Rng::seed_from_u64(derive_seed(seed, index, 1)).random_range(0.0..1.0),
        };
        let gains = large_scale_gains(&layout, &self.pathloss(), self.antenna())?;
        let episode = evolve_episode(&gains, rho, self.frames, derive_seed(seed, index, 2))?;
        Ok((layout, episode))
    }
}

/// Independent seed for `(master, index, stream)`, via SplitMix64 finalization.
pub fn derive_seed(master: u64, index: u64, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    for _ in 0..2 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}
