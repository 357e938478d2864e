//! Out-of-band aided mmWave beam selection.
//!
//! A sub-6 GHz channel estimate supplies a coarse angular prior that steers
//! compressive beam-pair selection at mmWave. The crate covers joint channel
//! generation for the two bands, array codebooks, the mmWave training front
//! end, sub-6 spatial-spectrum extraction, greedy selectors, and an experiment
//! harness.
//!
//! ```
//! use oobeam::harness::{ExperimentConfig, MeasurementShape, run_experiment};
//!
//! let mut cfg = ExperimentConfig::default();
//! cfg.trials = 2;
//! cfg.measurements = vec![MeasurementShape::new(4, 4)];
//! let result = run_experiment(&cfg).unwrap();
//! assert!(result.table.rows.iter().all(|r| r.r_eff >= 0.0));
//! ```

pub mod beamsel;
pub mod channel;
pub mod codebook;
mod error;
pub mod frontend;
pub mod harness;
pub mod oob;
pub mod rng;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    pub mod intro {}
    #[doc = include_str!("../../../book/src/channel.md")]
    pub mod channel {}
    #[doc = include_str!("../../../book/src/codebooks.md")]
    pub mod codebooks {}
    #[doc = include_str!("../../../book/src/frontend.md")]
    pub mod frontend {}
    #[doc = include_str!("../../../book/src/oob.md")]
    pub mod oob {}
    #[doc = include_str!("../../../book/src/selection.md")]
    pub mod selection {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub mod experiments {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    pub mod reproducibility {}
}
