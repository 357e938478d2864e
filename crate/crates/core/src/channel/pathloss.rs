use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Free-space loss at a 1 m reference followed by an exponent law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLoss {
    pub fc: f64,
    pub exponent: f64,
}

impl PathLoss {
    pub fn new(fc: f64, exponent: f64) -> Self {
        Self { fc, exponent }
    }

    pub fn reference_db(&self) -> f64 {
        20.0 * (4.0 * PI * self.fc / SPEED_OF_LIGHT).log10()
    }

    pub fn db(&self, distance: f64) -> f64 {
        self.reference_db() + 10.0 * self.exponent * distance.log10()
    }

    /// Linear power loss `ρ_pl` (greater than one beyond a few wavelengths).
    pub fn linear(&self, distance: f64) -> f64 {
        10f64.powf(self.db(distance) / 10.0)
    }
}

/// `ρ_pl` in linear scale for `distance` metres at carrier `fc`.
pub fn pathloss(distance: f64, fc: f64, exponent: f64) -> f64 {
    PathLoss::new(fc, exponent).linear(distance)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_distance() {
        let pl = PathLoss::new(28e9, 3.0);
        assert_eq!(pl.db(1.0), pl.reference_db());
        // 20 log10(4π 28e9 / c)
        assert!((pl.reference_db() - 61.391).abs() < 1e-3);
    }

    #[test]
    fn doubling_distance_with_exponent_three() {
        let ratio = pathloss(80.0, 28e9, 3.0) / pathloss(40.0, 28e9, 3.0);
        assert!((ratio - 8.0).abs() < 1e-9);
    }
}
