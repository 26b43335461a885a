use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Two-slope UHF path-loss model with a breakpoint at `4 h1 h2 / lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathLoss {
    pub wavelength_m: f64,
    pub tx_height_m: f64,
    pub rx_height_m: f64,
}

impl PathLoss {
    pub fn new(carrier_hz: f64, tx_height_m: f64, rx_height_m: f64) -> Self {
        Self { wavelength_m: SPEED_OF_LIGHT / carrier_hz, tx_height_m, rx_height_m }
    }

    pub fn breakpoint_m(&self) -> f64 {
        4.0 * self.tx_height_m * self.rx_height_m / self.wavelength_m
    }

    /// Basic path loss at the breakpoint, in dB.
    pub fn breakpoint_loss_db(&self) -> f64 {
        let l = self.wavelength_m;
        (20.0 * (l * l / (8.0 * std::f64::consts::PI * self.tx_height_m * self.rx_height_m)).log10()).abs()
    }

    pub fn loss_db(&self, distance_m: f64) -> Result<f64> {
        if !(distance_m > 0.0) {
            return Err(Error::domain(format!("path loss needs a positive distance, got {distance_m}")));
        }
        let ratio = (distance_m / self.breakpoint_m()).log10();
        let slope = if distance_m <= self.breakpoint_m() { 20.0 } else { 40.0 };
        Ok(self.breakpoint_loss_db() + 6.0 + slope * ratio)
    }
}
