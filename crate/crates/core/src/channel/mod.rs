//! Frequency-consistent clustered channels for a sub-6 GHz / mmWave band pair.
//!
//! Generation runs in two stages. The first stage ([`generate_clusters`])
//! draws cluster mean delays and angles for both bands jointly: independent
//! generation, replacement of early clusters so both bands share them, and a
//! frequency-dependent perturbation of one band. The second stage
//! ([`generate_rays`]) draws intra-cluster rays independently per band.
//! Realizations are then rendered to tap-domain and subcarrier-domain MIMO
//! matrices in [`render`].

mod clusters;
mod pathloss;
mod pulse;
pub mod render;
mod rays;

pub use clusters::{
    frequency_separation, generate_clusters, perturbed_band, q_sign, replacement_membership,
    ClusterDraw,
};
pub use pathloss::{pathloss, PathLoss, SPEED_OF_LIGHT};
pub use pulse::{PulseShape, RaisedCosine};
pub use rays::generate_rays;
pub(crate) use rays::complex_gaussian;
pub use render::{render_freq, render_narrowband_sub6, render_taps};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::codebook::Ula;
use crate::error::{config_err, Result};

/// Parameters of one band's channel and array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    /// Carrier frequency, Hz.
    pub fc: f64,
    /// Hz.
    pub bandwidth: f64,
    pub n_clusters: usize,
    pub rays_per_cluster: usize,
    /// Largest mean cluster delay, s.
    pub tau_max: f64,
    /// RMS intra-cluster delay spread, s.
    pub sigma_tau_ray: f64,
    /// RMS intra-cluster AoA spread, rad.
    pub sigma_aoa_ray: f64,
    /// RMS intra-cluster AoD spread, rad.
    pub sigma_aod_ray: f64,
    pub m_tx: usize,
    pub m_rx: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    pub pathloss_exponent: f64,
    /// Channel taps (wideband bands only).
    #[serde(default)]
    pub n_taps: usize,
    /// OFDM subcarriers (wideband bands only).
    #[serde(default)]
    pub n_subcarriers: usize,
    /// Cyclic-prefix length in samples, when the band is OFDM.
    #[serde(default)]
    pub cp_len: Option<usize>,
}

impl BandSpec {
    /// 3.5 GHz, 1 MHz, 4x4, four clusters of ten rays, τ_max ≈ 57 ns.
    pub fn sub6_default() -> Self {
        let tau_max = 57e-9;
        Self {
            fc: 3.5e9,
            bandwidth: 1e6,
            n_clusters: 4,
            rays_per_cluster: 10,
            tau_max,
            sigma_tau_ray: tau_max / (20.0 * 12f64.sqrt()),
            sigma_aoa_ray: 2.4f64.to_radians(),
            sigma_aod_ray: 2.4f64.to_radians(),
            m_tx: 4,
            m_rx: 4,
            spacing: 0.5,
            pathloss_exponent: 3.0,
            n_taps: 0,
            n_subcarriers: 0,
            cp_len: None,
        }
    }

    /// 28 GHz, 320 MHz, 32x32, three clusters of ten rays, τ_max ≈ 48 ns,
    /// 256 subcarriers with a 64-sample prefix and 63 taps.
    pub fn mmwave_default() -> Self {
        let tau_max = 48e-9;
        Self {
            fc: 28e9,
            bandwidth: 320e6,
            n_clusters: 3,
            rays_per_cluster: 10,
            tau_max,
            sigma_tau_ray: tau_max / (20.0 * 12f64.sqrt()),
            sigma_aoa_ray: 2f64.to_radians(),
            sigma_aod_ray: 2f64.to_radians(),
            m_tx: 32,
            m_rx: 32,
            spacing: 0.5,
            pathloss_exponent: 3.0,
            n_taps: 63,
            n_subcarriers: 256,
            cp_len: Some(64),
        }
    }

    pub fn sampling_interval(&self) -> f64 {
        1.0 / self.bandwidth
    }

    pub fn ula_tx(&self) -> Ula {
        Ula { m: self.m_tx, spacing: self.spacing }
    }

    pub fn ula_rx(&self) -> Ula {
        Ula { m: self.m_rx, spacing: self.spacing }
    }

    pub fn pathloss_model(&self) -> PathLoss {
        PathLoss::new(self.fc, self.pathloss_exponent)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fc > 0.0) {
            return config_err(format!("carrier frequency must be positive, got {}", self.fc));
        }
        if !(self.bandwidth > 0.0) {
            return config_err("bandwidth must be positive");
        }
        if self.n_clusters == 0 {
            return config_err("at least one cluster is required");
        }
        if self.rays_per_cluster == 0 {
            return config_err("at least one ray per cluster is required");
        }
        if !(self.tau_max > 0.0) {
            return config_err(format!("tau_max must be positive, got {}", self.tau_max));
        }
        for (name, v) in [
            ("sigma_tau_ray", self.sigma_tau_ray),
            ("sigma_aoa_ray", self.sigma_aoa_ray),
            ("sigma_aod_ray", self.sigma_aod_ray),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return config_err(format!("{name} must be finite and non-negative"));
            }
        }
        if self.m_tx == 0 || self.m_rx == 0 {
            return config_err("antenna counts must be positive");
        }
        if !(self.spacing > 0.0) {
            return config_err("element spacing must be positive");
        }
        if let Some(cp) = self.cp_len {
            if self.n_taps > cp + 1 {
                return config_err(format!(
                    "{} taps exceed the cyclic prefix ({cp}) plus one",
                    self.n_taps
                ));
            }
        }
        if self.n_taps > 0 && self.n_subcarriers > 0 && self.n_subcarriers < self.n_taps {
            return config_err("need at least as many subcarriers as taps");
        }
        Ok(())
    }

    fn validate_wideband(&self) -> Result<()> {
        self.validate()?;
        if self.n_taps == 0 || self.n_subcarriers == 0 {
            return config_err("wideband rendering needs n_taps and n_subcarriers");
        }
        Ok(())
    }
}

/// Support of the cluster mean angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngularDomain {
    /// `[-π/2, π/2)`
    #[default]
    Half,
    /// `[0, 2π)`
    Full,
}

impl AngularDomain {
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            AngularDomain::Half => (-PI / 2.0, PI / 2.0),
            AngularDomain::Full => (0.0, 2.0 * PI),
        }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.bounds();
        lo + (hi - lo) * rng.random::<f64>()
    }
}

/// Zero-mean offset distribution, parameterized by its RMS value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadDistribution {
    #[default]
    Uniform,
    Gaussian,
    Laplacian,
}

/// Intra-cluster sampling choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RayModel {
    #[serde(default)]
    pub delay: SpreadDistribution,
    #[serde(default)]
    pub angle: SpreadDistribution,
}

/// Mean delay and mean angles of one cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    /// s
    pub tau: f64,
    /// rad
    pub aoa: f64,
    /// rad
    pub aod: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub gain: Complex64,
    /// Delay relative to the cluster mean, s.
    pub delay: f64,
    pub aoa_offset: f64,
    pub aod_offset: f64,
}

/// One band's clusters and rays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub band: BandSpec,
    pub clusters: Vec<ClusterParams>,
    pub rays: Vec<Vec<Ray>>,
    /// Linear path loss `ρ_pl`.
    pub pathloss: f64,
}

impl ChannelRealization {
    pub fn new(
        band: BandSpec,
        clusters: Vec<ClusterParams>,
        rays: Vec<Vec<Ray>>,
        pathloss: f64,
    ) -> Result<Self> {
        if rays.len() != clusters.len() {
            return config_err("one ray list per cluster is required");
        }
        if !(pathloss > 0.0) {
            return config_err("path loss must be positive");
        }
        Ok(Self { band, clusters, rays, pathloss })
    }

    /// Largest `τ_c + τ_r` over all rays.
    pub fn max_delay(&self) -> f64 {
        self.clusters
            .iter()
            .zip(&self.rays)
            .flat_map(|(c, rs)| rs.iter().map(move |r| c.tau + r.delay))
            .fold(0.0, f64::max)
    }
}

/// Choices shared by both generation stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GenerationOptions {
    #[serde(default)]
    pub domain: AngularDomain,
    #[serde(default)]
    pub rays: RayModel,
}

/// Coupled sub-6 GHz and mmWave realizations of one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiBandRealization {
    pub sub6: ChannelRealization,
    pub mmwave: ChannelRealization,
    /// Indices (into the delay-sorted cluster lists) shared by both bands.
    pub shared_cluster_indices: Vec<usize>,
}

/// Runs both generation stages for a band pair at `distance` metres.
///
/// Separate generators drive the cluster stage and the two ray stages so a
/// change to one band's ray count does not shift the other band's draws.
pub fn generate_multiband<R: Rng + ?Sized>(
    sub6: &BandSpec,
    mmwave: &BandSpec,
    distance: f64,
    opts: GenerationOptions,
    cluster_rng: &mut R,
    sub6_ray_rng: &mut R,
    mmwave_ray_rng: &mut R,
) -> Result<MultiBandRealization> {
    mmwave.validate_wideband()?;
    if !(distance > 0.0) {
        return config_err("distance must be positive");
    }
    let draw = generate_clusters(sub6, mmwave, opts.domain, cluster_rng)?;
    let sub6_rays = generate_rays(&draw.a, sub6, opts.rays, sub6_ray_rng);
    let mm_rays = generate_rays(&draw.b, mmwave, opts.rays, mmwave_ray_rng);
    Ok(MultiBandRealization {
        sub6: ChannelRealization::new(
            sub6.clone(),
            draw.a,
            sub6_rays,
            sub6.pathloss_model().linear(distance),
        )?,
        mmwave: ChannelRealization::new(
            mmwave.clone(),
            draw.b,
            mm_rays,
            mmwave.pathloss_model().linear(distance),
        )?,
        shared_cluster_indices: draw.shared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_specs_validate() {
        BandSpec::sub6_default().validate().unwrap();
        BandSpec::mmwave_default().validate().unwrap();
        assert!((BandSpec::mmwave_default().sampling_interval() - 3.125e-9).abs() < 1e-20);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = BandSpec::mmwave_default();
        s.tau_max = 0.0;
        assert!(s.validate().is_err());
        let mut s = BandSpec::mmwave_default();
        s.n_clusters = 0;
        assert!(s.validate().is_err());
        let mut s = BandSpec::mmwave_default();
        s.n_taps = 66;
        assert!(s.validate().is_err());
    }

    #[test]
    fn realization_requires_matching_ray_lists() {
        let c = ClusterParams { tau: 0.0, aoa: 0.0, aod: 0.0 };
        assert!(ChannelRealization::new(BandSpec::sub6_default(), vec![c], vec![], 1.0).is_err());
        assert!(
            ChannelRealization::new(BandSpec::sub6_default(), vec![c], vec![vec![]], 0.0).is_err()
        );
    }
}
