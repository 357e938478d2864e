//! Spatial-mismatch studies: one cluster per band, with either the sub-6
//! mean AoA offset or the sub-6 angle spread swept while the mmWave cluster
//! stays at broadside.

use serde::{Deserialize, Serialize};

use super::config::{Coherence, ExperimentConfig, MeasurementShape, Method, PinnedAngles, Scenario};
use super::run::run_experiment;
use crate::error::Result;

/// Base for both studies: 200 m, `N = 8 x 8`, unlimited coherence,
/// OMP against structured LW-OMP.
pub fn mismatch_base(base: &ExperimentConfig) -> ExperimentConfig {
    let mut c = base.clone();
    c.distance = 200.0;
    c.measurements = vec![MeasurementShape::new(8, 8)];
    c.coherence = vec![Coherence::Infinite];
    c.methods = vec![Method::Omp, Method::StructuredLwOmp];
    c.scenario = Scenario::Pinned(PinnedAngles::default());
    c
}

/// Sub-6 mean AoA at `offset` rad, all other mean angles at 0.
pub fn angle_mismatch_config(base: &ExperimentConfig, offset: f64) -> ExperimentConfig {
    let mut c = mismatch_base(base);
    c.scenario = Scenario::Pinned(PinnedAngles { sub6_aoa: offset, ..Default::default() });
    c
}

/// Sub-6 AoA and AoD spreads at `multiplier` times the mmWave AoA spread.
pub fn spread_mismatch_config(base: &ExperimentConfig, multiplier: f64) -> ExperimentConfig {
    let mut c = mismatch_base(base);
    let s = multiplier * c.mmwave.sigma_aoa_ray;
    c.sub6.sigma_aoa_ray = s;
    c.sub6.sigma_aod_ray = s;
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MismatchPoint {
    pub value: f64,
    pub omp: f64,
    pub structured_lw_omp: f64,
}

impl MismatchPoint {
    pub fn gain(&self) -> f64 {
        self.structured_lw_omp - self.omp
    }
}

/// Runs `make(value)` for every value and reports both rates.
pub fn mismatch_sweep<F>(values: &[f64], make: F) -> Result<Vec<MismatchPoint>>
where
    F: Fn(f64) -> ExperimentConfig,
{
    values
        .iter()
        .map(|&v| {
            let cfg = make(v);
            let res = run_experiment(&cfg)?;
            let rate = |m: Method| {
                res.table
                    .rows
                    .iter()
                    .find(|r| r.method == m)
                    .map_or(f64::NAN, |r| r.r_eff)
            };
            Ok(MismatchPoint {
                value: v,
                omp: rate(Method::Omp),
                structured_lw_omp: rate(Method::StructuredLwOmp),
            })
        })
        .collect()
}

/// First value at which structured LW-OMP falls below OMP, linearly
/// interpolated between the bracketing sweep points. `None` if the gain
/// never turns negative, or is already negative at the first point.
pub fn crossover(points: &[MismatchPoint]) -> Option<f64> {
    let first = points.first()?;
    if first.gain() < 0.0 {
        return None;
    }
    points.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if a.gain() >= 0.0 && b.gain() < 0.0 {
            let t = a.gain() / (a.gain() - b.gain());
            Some(a.value + t * (b.value - a.value))
        } else {
            None
        }
    })
}
