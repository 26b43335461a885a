use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gains::GainMatrix;
use super::pathloss::PathLoss;
use crate::error::{Error, Result};

const MAX_PLACEMENT_TRIES: usize = 10_000;

/// How the transmitter-receiver distance of a pair is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkDistanceLaw {
    /// Distance uniform on `[min, max]`, bearing uniform.
    #[default]
    UniformDistance,
    /// Receiver uniform over the annulus area.
    UniformArea,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkLayout {
    pub field_length_m: f64,
    pub tx: Vec<[f64; 2]>,
    pub rx: Vec<[f64; 2]>,
}

impl NetworkLayout {
    pub fn pairs(&self) -> usize {
        self.tx.len()
    }

    /// Links per square meter.
    pub fn link_density(&self) -> f64 {
        link_density(self.pairs(), self.field_length_m)
    }

    /// Distance from transmitter `j` to receiver `i`.
    pub fn distance(&self, j: usize, i: usize) -> f64 {
        let (a, b) = (self.tx[j], self.rx[i]);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }
}

pub fn link_density(pairs: usize, field_length_m: f64) -> f64 {
    pairs as f64 / (field_length_m * field_length_m)
}

/// Field length that realizes a train/test density factor `gamma = beta_train / beta_test`
/// at equal pair counts.
pub fn field_length_for_density_factor(train_field_length_m: f64, gamma: f64) -> f64 {
    train_field_length_m * gamma.sqrt()
}

/// Transmitters uniform in the square; each receiver at a random bearing and a
/// distance in `[min_dist, max_dist]`, redrawn until it lands inside the square.
pub fn generate_layout(
    pairs: usize,
    field_length_m: f64,
    min_dist: f64,
    max_dist: f64,
    law: LinkDistanceLaw,
    seed: u64,
) -> Result<NetworkLayout> {
    if pairs == 0 {
        return Err(Error::config("layout needs at least one pair"));
    }
    if !(min_dist > 0.0 && min_dist < max_dist && max_dist < field_length_m) {
        return Err(Error::config(format!(
            "need 0 < min-dist < max-dist < field length, got {min_dist}, {max_dist}, {field_length_m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tx = Vec::with_capacity(pairs);
    let mut rx = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let t = [rng.random_range(0.0..field_length_m), rng.random_range(0.0..field_length_m)];
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_TRIES {
            let d = match law {
                LinkDistanceLaw::UniformDistance => rng.random_range(min_dist..=max_dist),
                LinkDistanceLaw::UniformArea => rng.random_range(min_dist * min_dist..=max_dist * max_dist).sqrt(),
            };
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let r = [t[0] + d * angle.cos(), t[1] + d * angle.sin()];
            if (0.0..=field_length_m).contains(&r[0]) && (0.0..=field_length_m).contains(&r[1]) {
                placed = Some(r);
                break;
            }
        }
        let r = placed.ok_or_else(|| {
            Error::domain(format!("could not place a receiver inside the {field_length_m} m field"))
        })?;
        tx.push(t);
        rx.push(r);
    }
    Ok(NetworkLayout { field_length_m, tx, rx })
}

/// Antenna gains applied on top of path loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AntennaGains {
    /// Gain on each direct (intended) link, dB.
    pub direct_db: f64,
    /// Gain on each interference link, dB.
    pub cross_db: f64,
}

/// `g[j][i] = 10^((G - L(d(tx_j, rx_i))) / 10)`.
pub fn large_scale_gains(layout: &NetworkLayout, pathloss: &PathLoss, antenna: AntennaGains) -> Result<GainMatrix> {
    let k = layout.pairs();
    let mut data = Vec::with_capacity(k * k);
    for j in 0..k {
        for i in 0..k {
            let d = layout.distance(j, i);
            if d <= 0.0 {
                return Err(Error::domain(format!("transmitter {j} coincides with receiver {i}")));
            }
            let g = if i == j { antenna.direct_db } else { antenna.cross_db };
            data.push(10f64.powf((g - pathloss.loss_db(d)?) / 10.0));
        }
    }
    Ok(GainMatrix::from_vec(k, data).expect("k*k entries"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BOTH: AntennaGains = AntennaGains { direct_db: 5.0, cross_db: 5.0 };

    #[test]
    fn table_one_density() {
        let layout = generate_layout(20, 500.0, 2.0, 65.0, LinkDistanceLaw::UniformDistance, 1).unwrap();
        assert!((layout.link_density() - 8e-5).abs() < 1e-18);
        assert!((link_density(45, 750.0) - 8e-5).abs() < 1e-18);
        assert!((link_density(20, 500.0) / link_density(45, 750.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn positions_inside_field_and_pair_distances_in_range() {
        for law in [LinkDistanceLaw::UniformDistance, LinkDistanceLaw::UniformArea] {
            let layout = generate_layout(50, 300.0, 2.0, 65.0, law, 9).unwrap();
            for i in 0..50 {
                for p in [layout.tx[i], layout.rx[i]] {
                    assert!((0.0..=300.0).contains(&p[0]) && (0.0..=300.0).contains(&p[1]));
                }
                let d = layout.distance(i, i);
                assert!((2.0 - 1e-9..=65.0 + 1e-9).contains(&d), "{d}");
            }
        }
    }

    #[test]
    fn same_seed_same_layout() {
        let a = generate_layout(20, 500.0, 2.0, 65.0, LinkDistanceLaw::UniformDistance, 77).unwrap();
        let b = generate_layout(20, 500.0, 2.0, 65.0, LinkDistanceLaw::UniformDistance, 77).unwrap();
        let c = generate_layout(20, 500.0, 2.0, 65.0, LinkDistanceLaw::UniformDistance, 78).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        assert!(generate_layout(0, 500.0, 2.0, 65.0, LinkDistanceLaw::UniformDistance, 0).is_err());
        assert!(generate_layout(3, 50.0, 2.0, 65.0, LinkDistanceLaw::UniformDistance, 0).is_err());
        assert!(generate_layout(3, 500.0, 70.0, 65.0, LinkDistanceLaw::UniformDistance, 0).is_err());
    }

    #[test]
    fn equal_distances_give_equal_gains_and_decade_is_forty_db() {
        let pl = PathLoss::new(2.4e9, 1.5, 1.5);
        let layout = NetworkLayout {
            field_length_m: 1000.0,
            tx: vec![[0.0, 0.0], [0.0, 100.0]],
            rx: vec![[72.0, 0.0], [720.0, 100.0]],
        };
        let g = large_scale_gains(&layout, &pl, BOTH).unwrap();
        let far = NetworkLayout { field_length_m: 1000.0, tx: vec![[5.0, 5.0]], rx: vec![[77.0, 5.0]] };
        assert_eq!(g.direct(0), large_scale_gains(&far, &pl, BOTH).unwrap().direct(0));
        assert!((g.direct(1) / g.direct(0) - 1e-4).abs() < 1e-15);
    }

    #[test]
    fn antenna_gain_is_applied_per_link_class() {
        let pl = PathLoss::new(2.4e9, 1.5, 1.5);
        let layout = NetworkLayout { field_length_m: 100.0, tx: vec![[0.0, 0.0], [50.0, 0.0]], rx: vec![[10.0, 0.0], [60.0, 0.0]] };
        let with = large_scale_gains(&layout, &pl, AntennaGains { direct_db: 5.0, cross_db: 0.0 }).unwrap();
        let without = large_scale_gains(&layout, &pl, AntennaGains { direct_db: 0.0, cross_db: 0.0 }).unwrap();
        assert!((with.direct(0) / without.direct(0) - 10f64.powf(0.5)).abs() < 1e-12);
        assert_eq!(with.get(0, 1), without.get(0, 1));
    }

    #[test]
    fn coincident_positions_are_a_domain_error() {
        let pl = PathLoss::new(2.4e9, 1.5, 1.5);
        let layout = NetworkLayout { field_length_m: 10.0, tx: vec![[1.0, 1.0]], rx: vec![[1.0, 1.0]] };
        assert!(matches!(large_scale_gains(&layout, &pl, BOTH), Err(Error::Domain(_))));
    }
}
