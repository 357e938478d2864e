//! Sub-6 GHz side of the pipeline: least-squares channel estimate, spatial
//! spectrum, dominant angle bins and the prior over mmWave beam pairs.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::render::CMatrix;
use crate::error::{input_err, Result};
use crate::frontend::beamspace;

/// Magnitudes of the estimated sub-6 beamspace channel, `M̲_RX x M̲_TX`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSpectrum {
    pub mags: DMatrix<f64>,
}

impl SpatialSpectrum {
    pub fn new(mags: DMatrix<f64>) -> Self {
        Self { mags }
    }

    /// CSV rows, one per RX bin.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.mags.row_iter() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Orthogonal training: `sqrt(P) I`, one unit-direction vector per antenna,
/// each with power `power`.
pub fn default_training(m_tx: usize, power: f64) -> CMatrix {
    CMatrix::identity(m_tx, m_tx) * Complex64::new(power.sqrt(), 0.0)
}

/// Least-squares estimate `Ĥ = R T^*(T T^*)^{-1}` from `R = H T + V`, with
/// `V` i.i.d. `CN(0, sigma2)`.
pub fn estimate_sub6_channel<R: Rng + ?Sized>(
    h: &CMatrix,
    training: &CMatrix,
    sigma2: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    let (m_tx, n_tr) = training.shape();
    if m_tx != h.ncols() {
        return input_err("training rows must match the transmit antennas");
    }
    if n_tr < m_tx {
        return input_err(format!("{n_tr} training vectors cannot sound {m_tx} antennas"));
    }
    let sv = training.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > smax * 1e-12) {
        return input_err("training matrix is rank deficient");
    }
    let mut r = h * training;
    if sigma2 > 0.0 {
        for z in r.iter_mut() {
            *z += crate::channel::complex_gaussian(sigma2, rng);
        }
    }
    let gram = training * training.adjoint();
    let Some(inv) = gram.try_inverse() else {
        return input_err("training matrix is rank deficient");
    };
    Ok(r * training.adjoint() * inv)
}

/// `|A_RX^* Ĥ A_TX|` with square DFT dictionaries.
pub fn spatial_spectrum(h_est: &CMatrix, a_rx: &CMatrix, a_tx: &CMatrix) -> SpatialSpectrum {
    SpatialSpectrum::new(beamspace(h_est, a_rx, a_tx).map(|z| z.norm()))
}

/// Position of the strongest spectrum entry as `(rx_bin, tx_bin)`; ties go to
/// the lowest RX bin, then the lowest TX bin.
pub fn dominant_indices(spectrum: &SpatialSpectrum) -> (usize, usize) {
    let m = &spectrum.mags;
    let mut best = (0, 0);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] > m[best] {
                best = (i, j);
            }
        }
    }
    best
}

/// Keys cubic-convolution kernel with `a = -0.5`.
fn keys(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        (A + 2.0) * x.powi(3) - (A + 3.0) * x.powi(2) + 1.0
    } else if x < 2.0 {
        A * x.powi(3) - 5.0 * A * x.powi(2) + 8.0 * A * x - 4.0 * A
    } else {
        0.0
    }
}

/// Bicubic sample of `src` at fractional (row, col) position, replicating
/// edge samples beyond the borders.
pub fn bicubic_sample(src: &DMatrix<f64>, row: f64, col: f64) -> f64 {
    let (nr, nc) = src.shape();
    let r0 = row.floor() as i64;
    let c0 = col.floor() as i64;
    let mut acc = 0.0;
    for dr in -1..=2 {
        let ri = (r0 + dr).clamp(0, nr as i64 - 1) as usize;
        let wr = keys(row - (r0 + dr) as f64);
        if wr == 0.0 {
            continue;
        }
        for dc in -1..=2 {
            let ci = (c0 + dc).clamp(0, nc as i64 - 1) as usize;
            let wc = keys(col - (c0 + dc) as f64);
            acc += wr * wc * src[(ri, ci)];
        }
    }
    acc
}

/// Source coordinate of target grid index `t` when an `n_src` beam grid is
/// resampled to `n_dst` beams covering the same spatial-frequency range.
/// Bin centers line up in spatial frequency: `(t + 1/2) n_src/n_dst − 1/2`.
pub fn source_coordinate(t: usize, n_src: usize, n_dst: usize) -> f64 {
    (t as f64 + 0.5) * n_src as f64 / n_dst as f64 - 0.5
}

/// Bicubic upscaling of the spectrum onto the mmWave beam grid; negative
/// undershoot is clamped to zero.
pub fn scale_spectrum(spectrum: &SpatialSpectrum, target: (usize, usize)) -> Result<DMatrix<f64>> {
    let (sr, sc) = spectrum.mags.shape();
    let (tr, tc) = target;
    if tr < sr || tc < sc {
        return input_err(format!("cannot scale {sr}x{sc} down to {tr}x{tc}"));
    }
    Ok(DMatrix::from_fn(tr, tc, |i, j| {
        let v = bicubic_sample(
            &spectrum.mags,
            source_coordinate(i, sr, tr),
            source_coordinate(j, sc, tc),
        );
        v.max(0.0)
    }))
}

/// Prior activity probability per mmWave beam pair, flattened column-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorVector {
    pub p: Vec<f64>,
    pub j_p: f64,
}

impl PriorVector {
    pub fn uniform(len: usize, value: f64) -> Self {
        Self { p: vec![value; len], j_p: value }
    }
}

/// `p = J_p (g − min g) / max(g − min g)` over `g = vec(scaled)`.
///
/// A flat spectrum carries no direction; it yields `p = J_p/2` everywhere.
pub fn prior_vector(scaled: &DMatrix<f64>, j_p: f64) -> Result<PriorVector> {
    if !(j_p > 0.0 && j_p <= 1.0) {
        return input_err(format!("J_p must lie in (0, 1], got {j_p}"));
    }
    let g = scaled.as_slice();
    let lo = g.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > 0.0) {
        log::warn!("flat spatial spectrum; prior degenerates to uniform");
        return Ok(PriorVector::uniform(g.len(), j_p / 2.0));
    }
    let p = g.iter().map(|v| j_p * ((v - lo).abs() / range)).collect();
    Ok(PriorVector { p, j_p })
}
