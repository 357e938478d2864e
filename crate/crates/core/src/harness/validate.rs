//! Quick self-checks of the invariants the simulator relies on. Each check
//! is cheap enough to run from the command line.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::config::{ExperimentConfig, MeasurementShape, Method};
use super::run::Simulation;
use crate::beamsel::{lw_omp_select, lw_somp_select, omp_select, somp_select, WeightingConfig};
use crate::channel::render::CMatrix;
use crate::channel::{generate_clusters, AngularDomain, BandSpec, PathLoss};
use crate::codebook::{dft_codebook, random_codebook, Ula};
use crate::frontend::{
    beamspace, calibrate_noise, dft_matrix, from_beamspace, measure, vec_of, BeamPair, NoiseModel,
    SnrAnchor,
};
use crate::oob::PriorVector;
use crate::rng::{substream, Purpose, SimRng};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn rng(seed: u64, slot: u32) -> SimRng {
    substream(seed, 0, Purpose::Validation, slot)
}

fn random_matrix(r: usize, c: usize, rng: &mut SimRng) -> CMatrix {
    CMatrix::from_fn(r, c, |_, _| crate::channel::complex_gaussian(1.0, rng))
}

fn kronecker_identity(seed: u64) -> Check {
    let mut rng = rng(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let m_rx = rng.random_range(1..=8);
        let m_tx = rng.random_range(1..=8);
        let h = random_matrix(m_rx, m_tx, &mut rng);
        let f = random_codebook(&Ula::half_wave(m_tx), rng.random_range(1..=8), 3, &mut rng).unwrap();
        let q = random_codebook(&Ula::half_wave(m_rx), rng.random_range(1..=8), 3, &mut rng).unwrap();
        let ms = measure(std::slice::from_ref(&h), &f, &q, &NoiseModel::noiseless(), &[0], 1.0, &mut rng)
            .unwrap();
        let g = vec_of(&beamspace(&h, &dft_matrix(m_rx), &dft_matrix(m_tx)));
        let rhs = &ms.psi * g;
        let err = (&ms.y[0] - &rhs).norm() / ms.y[0].norm().max(f64::MIN_POSITIVE);
        worst = worst.max(err);
    }
    check("kronecker_identity", worst < 1e-10, format!("max relative error {worst:.2e}"))
}

fn dft_unitarity() -> Check {
    let mut worst: f64 = 0.0;
    for m in [4, 32] {
        let a = dft_matrix(m);
        worst = worst.max((a.adjoint() * &a - CMatrix::identity(m, m)).norm());
    }
    check("dft_unitarity", worst < 1e-10, format!("max ||A*A - I|| {worst:.2e}"))
}

fn score_oracle(seed: u64) -> Check {
    let mut rng = rng(seed, 1);
    let mut worst: f64 = 0.0;
    let mut collapse = true;
    for _ in 0..20 {
        let h = random_matrix(8, 8, &mut rng);
        let f = random_codebook(&Ula::half_wave(8), 4, 3, &mut rng).unwrap();
        let q = random_codebook(&Ula::half_wave(8), 4, 3, &mut rng).unwrap();
        let ms = measure(std::slice::from_ref(&h), &f, &q, &NoiseModel::new(0.1), &[0], 1.0, &mut rng)
            .unwrap();
        let sel = omp_select(&ms, 0).unwrap();
        for r in 0..ms.psi.ncols() {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..ms.psi.nrows() {
                acc += ms.psi[(i, r)].conj() * ms.y[0][i];
            }
            worst = worst.max((acc.norm() - sel.scores[r]).abs());
        }
        let prior = PriorVector::uniform(64, rng.random::<f64>());
        let lw = lw_omp_select(&ms, 0, &prior, &WeightingConfig::default()).unwrap();
        collapse &= lw.pair == sel.pair;
    }
    check(
        "score_oracle",
        worst < 1e-12 && collapse,
        format!("max score error {worst:.2e}, uniform-prior collapse {collapse}"),
    )
}

fn noiseless_recovery(seed: u64) -> Check {
    let mut rng = rng(seed, 2);
    let a = dft_matrix(8);
    let dft = dft_codebook(&Ula::half_wave(8));
    let w = WeightingConfig::default();
    let mut hits = 0;
    let n = 100;
    for _ in 0..n {
        let planted = BeamPair { rx: rng.random_range(0..8), tx: rng.random_range(0..8) };
        let mut g = CMatrix::zeros(8, 8);
        g[(planted.rx, planted.tx)] = crate::channel::complex_gaussian(1.0, &mut rng);
        let h = from_beamspace(&g, &a, &a);
        let ms = measure(&[h], &dft, &dft, &NoiseModel::noiseless(), &[0], 1.0, &mut rng).unwrap();
        let prior = PriorVector { p: (0..64).map(|_| rng.random::<f64>()).collect(), j_p: 1.0 };
        let picks = [
            omp_select(&ms, 0).unwrap().pair,
            lw_omp_select(&ms, 0, &prior, &w).unwrap().pair,
            somp_select(&ms).unwrap().pair,
            lw_somp_select(&ms, &prior, &w).unwrap().pair,
        ];
        hits += usize::from(picks.iter().all(|&p| p == planted));
    }
    check("noiseless_recovery", hits == n, format!("{hits}/{n} planted pairs recovered by every selector"))
}

fn identical_bands(seed: u64) -> Check {
    let mut rng = rng(seed, 3);
    let spec = BandSpec::mmwave_default();
    let ok = (0..50).all(|_| {
        let d = generate_clusters(&spec, &spec, AngularDomain::Half, &mut rng).unwrap();
        d.a == d.b
    });
    check("identical_band_clusters", ok, "50 draws".into())
}

fn snr_anchor(seed: u64) -> Check {
    let mut rng = rng(seed, 4);
    let mm = BandSpec::mmwave_default();
    let pl = PathLoss::new(mm.fc, mm.pathloss_exponent);
    let p_t = crate::frontend::dbm_to_watts(37.0);
    let k = mm.n_subcarriers;
    let anchor = SnrAnchor { distance: 80.0, snr_db: -10.0 };
    let noise = calibrate_noise(anchor, &pl, p_t, k);
    let n = 10_000;
    let mut power = 0.0;
    for _ in 0..n {
        power += crate::channel::complex_gaussian(noise.sigma2, &mut rng).norm_sqr();
    }
    let measured = p_t / k as f64 / pl.linear(80.0) / (power / n as f64);
    let db = crate::frontend::linear_to_db(measured);
    check("snr_anchor", (db + 10.0).abs() < 0.1, format!("{db:.3} dB at 80 m"))
}

fn small_experiment(seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.seed = seed;
    c.trials = 4;
    c.measurements = vec![MeasurementShape::new(4, 4)];
    c.methods = Method::ALL.to_vec();
    c
}

fn experiment_checks(seed: u64) -> Vec<Check> {
    let sim = match Simulation::new(small_experiment(seed)) {
        Ok(s) => s,
        Err(e) => return vec![check("experiment", false, e.to_string())],
    };
    let (a, b) = match (sim.run(), sim.run()) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return vec![check("experiment", false, e.to_string())],
    };
    let det = crate::harness::table_csv_string(&a.table).ok() == crate::harness::table_csv_string(&b.table).ok();
    let mono = a.table.rows.iter().all(|r| r.success.windows(2).all(|w| w[0] <= w[1]));
    let oracle_full = a
        .table
        .rows
        .iter()
        .filter(|r| r.method == Method::Oracle)
        .all(|r| a.table.success(r, 1) == Some(100.0));
    // The best single pair by rate bounds what any selection achieves.
    let mut bound_ok = true;
    for t in 0..sim.config.trials {
        let ctx = sim.prepare(t).expect("prepared above");
        let mut best: f64 = 0.0;
        for rx in 0..sim.config.mmwave.m_rx {
            for tx in 0..sim.config.mmwave.m_tx {
                let se = sim.spectral_efficiency(&ctx.freq, BeamPair { rx, tx });
                best = best.max(se.iter().sum::<f64>() / se.len() as f64);
            }
        }
        for r in a.records.iter().filter(|r| r.trial == t) {
            bound_ok &= r.mean_spectral_efficiency() <= best + 1e-12;
        }
    }
    vec![
        check("determinism", det, "two runs, identical CSV".into()),
        check("success_monotone", mono, "SP(B_1) <= SP(B_5) in every row".into()),
        check("oracle_self_consistency", oracle_full, "oracle SP(B_1) = 100%".into()),
        check("rate_upper_bound", bound_ok, "no pick beats the best fixed pair".into()),
    ]
}

/// Runs every check with generators derived from `seed`.
pub fn run_validation(seed: u64) -> Vec<Check> {
    let mut out = vec![
        kronecker_identity(seed),
        dft_unitarity(),
        score_oracle(seed),
        noiseless_recovery(seed),
        identical_bands(seed),
        snr_anchor(seed),
    ];
    out.extend(experiment_checks(seed));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_validation(7) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
