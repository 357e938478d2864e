use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AngularDomain, BandSpec, ClusterParams};
use crate::error::Result;

/// Percent frequency separation `|f_a - f_b| / max(f_a, f_b)`.
pub fn frequency_separation(fa: f64, fb: f64) -> f64 {
    (fa - fb).abs() / fa.max(fb)
}

/// Sign selector for bounded perturbations.
///
/// `+1` when stepping down by `w` from `x` would leave `[y, z]` on the low
/// side, `-1` when stepping up would leave it on the high side, a fair coin
/// otherwise. The low-side test wins when both hold.
pub fn q_sign<R: Rng + ?Sized>(x: f64, w: f64, y: f64, z: f64, rng: &mut R) -> f64 {
    if x - w < y {
        1.0
    } else if x + w > z {
        -1.0
    } else if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Draws the replacement-set membership of a cluster with mean delay `tau`:
/// member when `ξ > sep · tau / tau_max` with `ξ ~ U(0, 1]`.
pub fn replacement_membership<R: Rng + ?Sized>(
    tau: f64,
    tau_max: f64,
    sep: f64,
    rng: &mut R,
) -> bool {
    let xi = 1.0 - rng.random::<f64>();
    xi > sep * tau / tau_max
}

/// Index (0 for `a`, 1 for `b`) of the band whose clusters get replaced and
/// perturbed: the one with the larger `tau_max`, `a` on a tie.
pub fn perturbed_band(a: &BandSpec, b: &BandSpec) -> usize {
    if b.tau_max > a.tau_max {
        1
    } else {
        0
    }
}

/// Output of the cluster stage. Both lists are sorted by ascending delay
/// before replacement, and keep that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDraw {
    pub a: Vec<ClusterParams>,
    pub b: Vec<ClusterParams>,
    /// Indices present in both replacement sets.
    pub shared: Vec<usize>,
    /// 0 if band `a` was perturbed, 1 for band `b`.
    pub perturbed: usize,
}

fn draw_band<R: Rng + ?Sized>(
    spec: &BandSpec,
    domain: AngularDomain,
    rng: &mut R,
) -> Vec<ClusterParams> {
    (0..spec.n_clusters)
        .map(|_| ClusterParams {
            tau: spec.tau_max * rng.random::<f64>(),
            aoa: domain.sample(rng),
            aod: domain.sample(rng),
        })
        .collect()
}

/// Cluster stage for a band pair: independent generation, replacement of
/// co-occurring clusters, then frequency-dependent perturbation.
///
/// The perturbation draws `Δ ~ U[0,1)` per cluster of the perturbed band and
/// shifts its delay by `s τ Δ` and both angles by `s (τ/τ_max) Δ`, with `s` the
/// frequency separation. Each shift's sign comes from [`q_sign`] using the
/// shift magnitude as the step, so a shift never leaves its range when the
/// opposite direction fits. Results are clamped afterwards to absorb rounding.
pub fn generate_clusters<R: Rng + ?Sized>(
    spec_a: &BandSpec,
    spec_b: &BandSpec,
    domain: AngularDomain,
    rng: &mut R,
) -> Result<ClusterDraw> {
    spec_a.validate()?;
    spec_b.validate()?;

    let mut a = draw_band(spec_a, domain, rng);
    let mut b = draw_band(spec_b, domain, rng);
    a.sort_by(|x, y| x.tau.total_cmp(&y.tau));
    b.sort_by(|x, y| x.tau.total_cmp(&y.tau));

    let sep = frequency_separation(spec_a.fc, spec_b.fc);
    let in_a: Vec<bool> = a
        .iter()
        .map(|c| replacement_membership(c.tau, spec_a.tau_max, sep, rng))
        .collect();
    let in_b: Vec<bool> = b
        .iter()
        .map(|c| replacement_membership(c.tau, spec_b.tau_max, sep, rng))
        .collect();
    let shared: Vec<usize> = (0..a.len().min(b.len()))
        .filter(|&i| in_a[i] && in_b[i])
        .collect();

    let perturbed = perturbed_band(spec_a, spec_b);
    let (target, source, target_spec) = if perturbed == 0 {
        (&mut a, &b, spec_a)
    } else {
        (&mut b, &a, spec_b)
    };
    for &i in &shared {
        target[i] = source[i];
    }

    let (lo, hi) = domain.bounds();
    let hi_open = hi.next_down();
    let tau_max = target_spec.tau_max;
    for c in target.iter_mut() {
        let delta: f64 = rng.random();
        let tau_step = sep * c.tau * delta;
        let angle_step = sep * (c.tau / tau_max) * delta;
        let tau_sign = q_sign(c.tau, tau_step, 0.0, tau_max, rng);
        let aoa_sign = q_sign(c.aoa, angle_step, lo, hi, rng);
        let aod_sign = q_sign(c.aod, angle_step, lo, hi, rng);
        let tau = c.tau + tau_sign * tau_step;
        if !(0.0..=tau_max).contains(&tau) {
            log::debug!("clamping perturbed delay {tau:e} into [0, {tau_max:e}]");
        }
        c.tau = tau.clamp(0.0, tau_max);
        c.aoa = (c.aoa + aoa_sign * angle_step).clamp(lo, hi_open);
        c.aod = (c.aod + aod_sign * angle_step).clamp(lo, hi_open);
    }

    Ok(ClusterDraw { a, b, shared, perturbed })
}
