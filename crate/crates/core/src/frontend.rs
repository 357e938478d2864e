//! mmWave training front end: measurement synthesis, beamspace transforms,
//! the sensing matrix, noise calibration, and the exhaustive-search baseline.
//!
//! Flattening is column-major everywhere: beamspace entry `(i, j)` (RX beam
//! `i`, TX beam `j`) sits at flat index `r = j * M_RX + i`, the same order
//! `vec(G)` uses in the Kronecker identity behind the sensing matrix.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::render::CMatrix;
use crate::channel::PathLoss;
use crate::codebook::{dft_codebook, Codebook, Ula};
use crate::error::{input_err, Result};

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Distance at which the pre-beamforming per-subcarrier SNR equals `snr_db`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrAnchor {
    pub distance: f64,
    pub snr_db: f64,
}

/// Receiver noise per subcarrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Per-subcarrier noise variance, W. Zero means noiseless.
    pub sigma2: f64,
    pub anchor: Option<SnrAnchor>,
}

impl NoiseModel {
    pub fn new(sigma2: f64) -> Self {
        Self { sigma2, anchor: None }
    }

    pub fn noiseless() -> Self {
        Self::new(0.0)
    }

    /// Variance of the measurement noise after combining with a unit-norm
    /// combiner and dividing by a training symbol of power `p_t / k`.
    pub fn post_division_variance(&self, p_t: f64, k: usize) -> f64 {
        self.sigma2 * k as f64 / p_t
    }

    /// Pre-beamforming per-subcarrier SNR `(P_t/K) / (ρ_pl σ²)` in dB.
    pub fn pre_beamforming_snr_db(&self, p_t: f64, k: usize, pathloss: f64) -> f64 {
        linear_to_db(p_t / k as f64 / pathloss / self.sigma2)
    }
}

/// Noise variance that puts the pre-beamforming per-subcarrier SNR at the
/// anchor: `σ² = (P_t/K) / ρ_pl(d) / 10^{snr/10}`.
pub fn calibrate_noise(anchor: SnrAnchor, pathloss: &PathLoss, p_t: f64, k: usize) -> NoiseModel {
    let sigma2 = p_t / k as f64 / pathloss.linear(anchor.distance) / db_to_linear(anchor.snr_db);
    NoiseModel { sigma2, anchor: Some(anchor) }
}

/// A receive/transmit codeword pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BeamPair {
    pub rx: usize,
    pub tx: usize,
}

impl BeamPair {
    pub fn from_flat(r: usize, m_rx: usize) -> Self {
        Self { rx: r % m_rx, tx: r / m_rx }
    }

    pub fn flat(&self, m_rx: usize) -> usize {
        self.tx * m_rx + self.rx
    }
}

/// Column-major `vec`.
pub fn vec_of(m: &CMatrix) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

/// The unitary DFT dictionary of an `m`-element array. The codewords depend
/// only on the spatial grid, so element spacing does not enter.
pub fn dft_matrix(m: usize) -> CMatrix {
    dft_codebook(&Ula::half_wave(m)).matrix
}

/// Beamspace (virtual) channel `G = A_RX^* H A_TX`.
pub fn beamspace(h: &CMatrix, a_rx: &CMatrix, a_tx: &CMatrix) -> CMatrix {
    a_rx.adjoint() * h * a_tx
}

/// Inverse of [`beamspace`] for unitary dictionaries: `H = A_RX G A_TX^*`.
pub fn from_beamspace(g: &CMatrix, a_rx: &CMatrix, a_tx: &CMatrix) -> CMatrix {
    a_rx * g * a_tx.adjoint()
}

/// Sensing matrix `Ψ = (F^T ⊗ Q^*)(A_TX^c ⊗ A_RX)`, computed through the
/// mixed-product form `(F^T A_TX^c) ⊗ (Q^* A_RX)`.
pub fn assemble_sensing(f: &CMatrix, q: &CMatrix, a_tx: &CMatrix, a_rx: &CMatrix) -> CMatrix {
    let tx_part = f.transpose() * a_tx.conjugate();
    let rx_part = q.adjoint() * a_rx;
    tx_part.kronecker(&rx_part)
}

/// Training measurements on a set of subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    /// `vec(Y[k])` per probed subcarrier, in `subcarriers` order.
    pub y: Vec<DVector<Complex64>>,
    pub f: Codebook,
    pub q: Codebook,
    pub psi: CMatrix,
    pub subcarriers: Vec<usize>,
}

impl MeasurementSet {
    pub fn n_measurements(&self) -> usize {
        self.f.len() * self.q.len()
    }

    /// Measurement vector of subcarrier `k`, if it was probed.
    pub fn for_subcarrier(&self, k: usize) -> Option<&DVector<Complex64>> {
        self.subcarriers.iter().position(|&s| s == k).map(|i| &self.y[i])
    }

    pub fn m_rx(&self) -> usize {
        self.q.antennas()
    }
}

fn add_noise<R: Rng + ?Sized>(m: &mut CMatrix, variance: f64, rng: &mut R) {
    if variance > 0.0 {
        for z in m.iter_mut() {
            *z += crate::channel::complex_gaussian(variance, rng);
        }
    }
}

/// Synthesizes `Y[k] = Q^* H[k] F + V[k]` on each listed subcarrier.
///
/// `V[k]` is the noise after combining and division by the training symbol:
/// i.i.d. `CN(0, σ² K / P_t)` for unit-norm combiners, with `P_t` the total
/// OFDM block power.
pub fn measure<R: Rng + ?Sized>(
    freq: &[CMatrix],
    f: &Codebook,
    q: &Codebook,
    noise: &NoiseModel,
    subcarriers: &[usize],
    p_t: f64,
    rng: &mut R,
) -> Result<MeasurementSet> {
    let k_total = freq.len();
    if let Some(&bad) = subcarriers.iter().find(|&&k| k >= k_total) {
        return input_err(format!("subcarrier {bad} outside 0..{k_total}"));
    }
    if subcarriers.is_empty() {
        return input_err("no subcarriers to probe");
    }
    let (m_rx, m_tx) = freq[0].shape();
    if f.antennas() != m_tx || q.antennas() != m_rx {
        return input_err("codebook sizes do not match the channel");
    }
    let var = noise.post_division_variance(p_t, k_total);
    let qh = q.matrix.adjoint();
    let y = subcarriers
        .iter()
        .map(|&k| {
            let mut yk = &qh * &freq[k] * &f.matrix;
            add_noise(&mut yk, var, rng);
            vec_of(&yk)
        })
        .collect();
    let psi = assemble_sensing(&f.matrix, &q.matrix, &dft_matrix(m_tx), &dft_matrix(m_rx));
    Ok(MeasurementSet {
        y,
        f: f.clone(),
        q: q.clone(),
        psi,
        subcarriers: subcarriers.to_vec(),
    })
}

/// Noiseless received power of every DFT beam pair, summed over the listed
/// beamspace matrices. Flat, column-major.
pub fn beam_powers(beamspaces: &[&CMatrix]) -> Vec<f64> {
    let Some(first) = beamspaces.first() else {
        return Vec::new();
    };
    let mut acc = vec![0.0; first.len()];
    for g in beamspaces {
        for (a, z) in acc.iter_mut().zip(g.iter()) {
            *a += z.norm_sqr();
        }
    }
    acc
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Flat indices sorted by decreasing value, lowest index first on ties.
pub fn ranked(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Exhaustive DFT sweep given beamspace channels of the probed subcarriers.
/// With `post_variance > 0` every one of the `M_RX M_TX` measurements gets its
/// own noise draw.
pub fn exhaustive_from_beamspace<R: Rng + ?Sized>(
    beamspaces: &[&CMatrix],
    post_variance: f64,
    rng: &mut R,
) -> BeamPair {
    let m_rx = beamspaces[0].nrows();
    let mut acc = vec![0.0; beamspaces[0].len()];
    for g in beamspaces {
        let mut y = (*g).clone();
        add_noise(&mut y, post_variance, rng);
        for (a, z) in acc.iter_mut().zip(y.iter()) {
            *a += z.norm_sqr();
        }
    }
    BeamPair::from_flat(argmax(&acc), m_rx)
}

/// Exhaustive search over all DFT beam pairs on `subcarriers`, summing the
/// received power across them. `noiseless` skips the noise draws and gives
/// the ground-truth best pair.
pub fn exhaustive_search<R: Rng + ?Sized>(
    freq: &[CMatrix],
    subcarriers: &[usize],
    noise: &NoiseModel,
    p_t: f64,
    rng: &mut R,
    noiseless: bool,
) -> Result<BeamPair> {
    if subcarriers.is_empty() {
        return input_err("no subcarriers to probe");
    }
    if let Some(&bad) = subcarriers.iter().find(|&&k| k >= freq.len()) {
        return input_err(format!("subcarrier {bad} outside 0..{}", freq.len()));
    }
    let (m_rx, m_tx) = freq[0].shape();
    let (a_rx, a_tx) = (dft_matrix(m_rx), dft_matrix(m_tx));
    let gs: Vec<CMatrix> = subcarriers
        .iter()
        .map(|&k| beamspace(&freq[k], &a_rx, &a_tx))
        .collect();
    let refs: Vec<&CMatrix> = gs.iter().collect();
    let var = if noiseless {
        0.0
    } else {
        noise.post_division_variance(p_t, freq.len())
    };
    Ok(exhaustive_from_beamspace(&refs, var, rng))
}

/// Received-power gain `|a_RX^*(ν_i) H a_TX(ω_j)|²` of a DFT beam pair.
pub fn pair_gain(h: &CMatrix, a_rx: &CMatrix, a_tx: &CMatrix, pair: BeamPair) -> f64 {
    let v = a_rx.column(pair.rx).adjoint() * h * a_tx.column(pair.tx);
    v[(0, 0)].norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::random_codebook;
    use crate::rng::seeded;

    #[test]
    fn flat_index_roundtrip() {
        for r in 0..1024 {
            let p = BeamPair::from_flat(r, 32);
            assert_eq!(p.flat(32), r);
            // One-based form: j* = ceil(r*/M_RX), i* = r* - (j*-1) M_RX.
            let r1 = r + 1;
            let j1 = r1.div_ceil(32);
            assert_eq!(p.tx + 1, j1);
            assert_eq!(p.rx + 1, r1 - (j1 - 1) * 32);
        }
    }

    #[test]
    fn zero_db_anchor() {
        let pl = PathLoss::new(28e9, 3.0);
        let anchor = SnrAnchor { distance: 50.0, snr_db: 0.0 };
        let n = calibrate_noise(anchor, &pl, 5.0, 256);
        assert!((n.sigma2 - 5.0 / 256.0 / pl.linear(50.0)).abs() < 1e-30);
    }

    #[test]
    fn snr_scales_with_distance() {
        let pl = PathLoss::new(28e9, 3.0);
        let p_t = dbm_to_watts(37.0);
        let n = calibrate_noise(SnrAnchor { distance: 80.0, snr_db: -10.0 }, &pl, p_t, 256);
        let at_anchor = n.pre_beamforming_snr_db(p_t, 256, pl.linear(80.0));
        assert!((at_anchor + 10.0).abs() < 1e-9);
        let at_40 = n.pre_beamforming_snr_db(p_t, 256, pl.linear(40.0));
        assert!((at_40 - (-10.0 + 30.0 * 2f64.log10())).abs() < 1e-9);
        assert!((at_40 + 0.969).abs() < 1e-3);
    }

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-12);
        assert!((dbm_to_watts(37.0) - 5.0119).abs() < 1e-4);
    }

    #[test]
    fn full_dft_training_gives_identity_sensing() {
        for m in [4, 8] {
            let a = dft_matrix(m);
            let psi = assemble_sensing(&a, &a, &a, &a);
            assert!((psi - CMatrix::identity(m * m, m * m)).norm() < 1e-12);
        }
    }

    #[test]
    fn on_grid_rank_one_beamspace() {
        let a = dft_matrix(8);
        let h = a.column(5) * a.column(2).adjoint();
        let g = beamspace(&h, &a, &a);
        assert!((g[(5, 2)].norm() - 1.0).abs() < 1e-12);
        let others: f64 = g.iter().map(|z| z.norm()).sum::<f64>() - g[(5, 2)].norm();
        assert!(others < 1e-12);
        let p = exhaustive_search(&[h], &[0], &NoiseModel::noiseless(), 1.0, &mut seeded(0), true)
            .unwrap();
        assert_eq!(p, BeamPair { rx: 5, tx: 2 });
    }

    #[test]
    fn noiseless_measurement_matches_sensing_model() {
        let mut rng = seeded(4);
        let (m_rx, m_tx) = (8, 6);
        let h = CMatrix::from_fn(m_rx, m_tx, |_, _| crate::channel::complex_gaussian(1.0, &mut rng));
        let f = random_codebook(&Ula::half_wave(m_tx), 3, 3, &mut rng).unwrap();
        let q = random_codebook(&Ula::half_wave(m_rx), 4, 3, &mut rng).unwrap();
        let ms = measure(
            std::slice::from_ref(&h),
            &f,
            &q,
            &NoiseModel::noiseless(),
            &[0],
            1.0,
            &mut rng,
        )
        .unwrap();
        assert_eq!(ms.psi.shape(), (12, 48));
        let g = vec_of(&beamspace(&h, &dft_matrix(m_rx), &dft_matrix(m_tx)));
        let err = (&ms.psi * g - &ms.y[0]).norm() / ms.y[0].norm();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn measure_rejects_bad_subcarrier() {
        let h = CMatrix::zeros(4, 4);
        let f = dft_codebook(&Ula::half_wave(4));
        let r = measure(&[h], &f, &f, &NoiseModel::noiseless(), &[1], 1.0, &mut seeded(0));
        assert!(matches!(r, Err(crate::Error::Input(_))));
    }

    #[test]
    fn ranking_breaks_ties_low() {
        assert_eq!(ranked(&[1.0, 3.0, 3.0, 0.5]), vec![1, 2, 0, 3]);
        assert_eq!(argmax(&[2.0, 2.0, 1.0]), 0);
    }
}
