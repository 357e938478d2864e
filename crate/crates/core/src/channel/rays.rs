use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{BandSpec, ClusterParams, Ray, RayModel, SpreadDistribution};

/// Zero-mean draw with RMS value `rms`.
fn spread<R: Rng + ?Sized>(dist: SpreadDistribution, rms: f64, rng: &mut R) -> f64 {
    if rms == 0.0 {
        return 0.0;
    }
    match dist {
        SpreadDistribution::Uniform => {
            let half = 3f64.sqrt() * rms;
            half * (2.0 * rng.random::<f64>() - 1.0)
        }
        SpreadDistribution::Gaussian => {
            let z: f64 = StandardNormal.sample(rng);
            rms * z
        }
        SpreadDistribution::Laplacian => {
            // Scale b = rms / sqrt(2); inverse-CDF sampling.
            let b = rms / 2f64.sqrt();
            let u = rng.random::<f64>() - 0.5;
            -b * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
        }
    }
}

/// Circularly-symmetric complex Gaussian with the given variance.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Second stage: intra-cluster rays for every cluster of one band.
///
/// Offsets are zero-mean with the band's RMS spreads; gains are Rayleigh
/// `CN(0, 1/R_c)` so each cluster carries unit power in expectation.
pub fn generate_rays<R: Rng + ?Sized>(
    clusters: &[ClusterParams],
    spec: &BandSpec,
    model: RayModel,
    rng: &mut R,
) -> Vec<Vec<Ray>> {
    let var = 1.0 / spec.rays_per_cluster as f64;
    clusters
        .iter()
        .map(|_| {
            (0..spec.rays_per_cluster)
                .map(|_| Ray {
                    delay: spread(model.delay, spec.sigma_tau_ray, rng),
                    aoa_offset: spread(model.angle, spec.sigma_aoa_ray, rng),
                    aod_offset: spread(model.angle, spec.sigma_aod_ray, rng),
                    gain: complex_gaussian(var, rng),
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn rms(xs: &[f64]) -> f64 {
        (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
    }

    #[test]
    fn uniform_delay_support_width() {
        // σ = τ_max/(20√12) gives a uniform support of width τ_max/20.
        let spec = BandSpec::mmwave_default();
        let half = 3f64.sqrt() * spec.sigma_tau_ray;
        assert!((2.0 * half - 2.4e-9).abs() < 1e-18);
        let c = [ClusterParams { tau: 0.0, aoa: 0.0, aod: 0.0 }];
        let rays = generate_rays(&c, &spec, RayModel::default(), &mut seeded(2));
        assert!(rays[0].iter().all(|r| r.delay.abs() <= half));
    }

    #[test]
    fn zero_spread_collapses_to_cluster_mean() {
        let mut spec = BandSpec::mmwave_default();
        spec.sigma_aoa_ray = 0.0;
        let c = [ClusterParams { tau: 1e-9, aoa: 0.3, aod: -0.2 }; 3];
        let rays = generate_rays(&c, &spec, RayModel::default(), &mut seeded(2));
        assert!(rays.iter().flatten().all(|r| r.aoa_offset == 0.0));
    }

    #[test]
    fn spread_distributions_hit_their_rms() {
        let mut rng = seeded(8);
        for dist in [
            SpreadDistribution::Uniform,
            SpreadDistribution::Gaussian,
            SpreadDistribution::Laplacian,
        ] {
            let xs: Vec<f64> = (0..200_000).map(|_| spread(dist, 0.1, &mut rng)).collect();
            let r = rms(&xs);
            assert!((r - 0.1).abs() < 0.002, "{dist:?}: {r}");
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            assert!(mean.abs() < 0.002, "{dist:?} mean {mean}");
        }
    }

    #[test]
    fn gains_have_cluster_power_over_rays() {
        let spec = BandSpec::mmwave_default();
        let c = vec![ClusterParams { tau: 0.0, aoa: 0.0, aod: 0.0 }; 20_000];
        let rays = generate_rays(&c, &spec, RayModel::default(), &mut seeded(5));
        let p: f64 = rays.iter().flatten().map(|r| r.gain.norm_sqr()).sum::<f64>()
            / (20_000 * spec.rays_per_cluster) as f64;
        assert!((p - 0.1).abs() < 0.002, "{p}");
    }
}
