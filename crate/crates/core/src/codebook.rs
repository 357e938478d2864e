//! Uniform linear arrays, DFT codebooks and phase-quantized training codebooks.
//!
//! All codewords have constant modulus `1/sqrt(m)`, matching analog
//! phase-shifter hardware. Matrices are `m x n` with one codeword per column.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, input_err, Result};

/// Uniform linear array with `m` elements spaced `spacing` wavelengths apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ula {
    pub m: usize,
    pub spacing: f64,
}

impl Ula {
    pub fn new(m: usize, spacing: f64) -> Result<Self> {
        if m == 0 {
            return config_err("array needs at least one element");
        }
        if !(spacing > 0.0) {
            return config_err(format!("element spacing must be positive, got {spacing}"));
        }
        Ok(Self { m, spacing })
    }

    /// Half-wavelength array.
    pub fn half_wave(m: usize) -> Self {
        Self { m, spacing: 0.5 }
    }

    /// Steering vector `(1/sqrt(m)) [1, e^{j2πd sinθ}, ..., e^{j2π(m-1)d sinθ}]^T`.
    pub fn response(&self, angle: f64) -> DVector<Complex64> {
        self.response_spatial(self.spacing * angle.sin())
    }

    /// Steering vector for a normalized spatial frequency `nu = d sinθ`.
    pub fn response_spatial(&self, nu: f64) -> DVector<Complex64> {
        let norm = 1.0 / (self.m as f64).sqrt();
        DVector::from_fn(self.m, |n, _| {
            Complex64::from_polar(norm, 2.0 * PI * n as f64 * nu)
        })
    }

    pub fn grid(&self) -> BeamGrid {
        BeamGrid::new(*self)
    }
}

/// Free-function form of [`Ula::response`].
pub fn array_response(ula: &Ula, angle: f64) -> DVector<Complex64> {
    ula.response(angle)
}

/// The DFT beam grid of an array: `ν_m = (2m+1-M)/(2M)` for zero-based `m`,
/// with physical angles `θ_m = asin(ν_m / d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamGrid {
    pub spatial: Vec<f64>,
    pub angles: Vec<f64>,
}

impl BeamGrid {
    pub fn new(ula: Ula) -> Self {
        let m = ula.m as f64;
        let spatial: Vec<f64> = (0..ula.m)
            .map(|i| (2.0 * i as f64 + 1.0 - m) / (2.0 * m))
            .collect();
        let angles = spatial
            .iter()
            .map(|nu| (nu / ula.spacing).clamp(-1.0, 1.0).asin())
            .collect();
        Self { spatial, angles }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookKind {
    Dft,
    RandomQuantized,
    Structured,
    DeterministicGrid,
}

/// A set of beamforming codewords stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub matrix: DMatrix<Complex64>,
    pub kind: CodebookKind,
    pub phase_bits: Option<u32>,
}

impl Codebook {
    pub fn antennas(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn len(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.ncols() == 0
    }

    pub fn codeword(&self, i: usize) -> DVector<Complex64> {
        self.matrix.column(i).into_owned()
    }

    pub fn to_json(&self) -> CodebookJson {
        CodebookJson::from(self)
    }
}

/// JSON debug form of a codebook; complex entries are `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookJson {
    pub kind: CodebookKind,
    pub phase_bits: Option<u32>,
    pub antennas: usize,
    pub codewords: Vec<Vec<[f64; 2]>>,
}

impl From<&Codebook> for CodebookJson {
    fn from(cb: &Codebook) -> Self {
        let codewords = cb
            .matrix
            .column_iter()
            .map(|col| col.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        Self {
            kind: cb.kind,
            phase_bits: cb.phase_bits,
            antennas: cb.antennas(),
            codewords,
        }
    }
}

impl From<&CodebookJson> for Codebook {
    fn from(js: &CodebookJson) -> Self {
        let n = js.codewords.len();
        let matrix = DMatrix::from_fn(js.antennas, n, |i, j| {
            let [re, im] = js.codewords[j][i];
            Complex64::new(re, im)
        });
        Self {
            matrix,
            kind: js.kind,
            phase_bits: js.phase_bits,
        }
    }
}

/// Columns `a(θ_m)` over the array's beam grid. Unitary for any `m`.
pub fn dft_codebook(ula: &Ula) -> Codebook {
    let grid = ula.grid();
    let mut matrix = DMatrix::zeros(ula.m, ula.m);
    for (j, nu) in grid.spatial.iter().enumerate() {
        matrix.set_column(j, &ula.response_spatial(*nu));
    }
    let phase_bits = ula.m.is_power_of_two().then(|| ula.m.trailing_zeros());
    Codebook {
        matrix,
        kind: CodebookKind::Dft,
        phase_bits,
    }
}

fn quantized_phase<R: Rng + ?Sized>(phase_bits: u32, rng: &mut R) -> f64 {
    let levels = 1u64 << phase_bits;
    let q = rng.random_range(0..levels);
    2.0 * PI * q as f64 / levels as f64
}

/// Random training codebook: entries `e^{jζ}/sqrt(m)` with ζ drawn uniformly
/// from the `2^phase_bits` quantized phases.
pub fn random_codebook<R: Rng + ?Sized>(
    ula: &Ula,
    n_beams: usize,
    phase_bits: u32,
    rng: &mut R,
) -> Result<Codebook> {
    if n_beams == 0 {
        return input_err("codebook needs at least one beam");
    }
    if phase_bits == 0 || phase_bits > 16 {
        return input_err(format!("phase_bits must be in 1..=16, got {phase_bits}"));
    }
    let norm = 1.0 / (ula.m as f64).sqrt();
    // Column-major fill keeps draws ordered codeword by codeword.
    let mut matrix = DMatrix::zeros(ula.m, n_beams);
    for j in 0..n_beams {
        for i in 0..ula.m {
            matrix[(i, j)] = Complex64::from_polar(norm, quantized_phase(phase_bits, rng));
        }
    }
    Ok(Codebook {
        matrix,
        kind: CodebookKind::RandomQuantized,
        phase_bits: Some(phase_bits),
    })
}

/// Indices of the large-array grid beams whose spatial frequency falls inside
/// bin `bin` of a small `m_small`-element grid, i.e. in
/// `[ν_bin - 1/(2 m_small), ν_bin + 1/(2 m_small))`.
///
/// Both grids are rational, so membership is decided in exact integer
/// arithmetic: `(2j+1-M)/(2M) >= (2b-M_s)/(2M_s)` iff `(2j+1-M) M_s >= (2b-M_s) M`.
pub fn beams_in_bin(m_large: usize, m_small: usize, bin: usize) -> Vec<usize> {
    let (ml, ms, b) = (m_large as i64, m_small as i64, bin as i64);
    let lo = (2 * b - ms) * ml;
    let hi = (2 * b + 2 - ms) * ml;
    (0..m_large)
        .filter(|&j| {
            let v = (2 * j as i64 + 1 - ml) * ms;
            v >= lo && v < hi
        })
        .collect()
}

/// Default super-codebook size when the caller does not fix one.
pub fn default_super_size(n_beams: usize, m: usize) -> usize {
    4 * n_beams.max(m)
}

/// Picks the `n` codewords of `super_cb` with the largest correlation
/// `||D^* f||_2` against the deterministic codebook `dict`. Returned indices
/// are ascending; ties on the norm go to the lower index.
pub fn select_correlated(
    super_cb: &DMatrix<Complex64>,
    dict: &DMatrix<Complex64>,
    n: usize,
) -> Vec<usize> {
    let corr = super_cb.adjoint() * dict;
    let norms: Vec<f64> = corr.row_iter().map(|r| r.norm_squared()).collect();
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let mut picked: Vec<usize> = order.into_iter().take(n).collect();
    picked.sort_unstable();
    picked
}

/// Training codebook tailored to a dominant out-of-band angle bin.
///
/// Builds the deterministic grid codebook of the large-array beams inside
/// `dominant_bin` of the `m_small`-element grid, draws a random super-codebook
/// of `super_size` codewords and keeps the `n_beams` codewords most correlated
/// with it. Works for either link end: pass the TX array and the dominant TX
/// bin for precoders, or the RX array and RX bin for combiners.
pub fn structured_codebook<R: Rng + ?Sized>(
    ula: &Ula,
    dominant_bin: usize,
    m_small: usize,
    n_beams: usize,
    super_size: usize,
    phase_bits: u32,
    rng: &mut R,
) -> Result<Codebook> {
    if m_small == 0 || dominant_bin >= m_small {
        return input_err(format!(
            "dominant bin {dominant_bin} outside the {m_small}-beam grid"
        ));
    }
    if n_beams > super_size {
        return input_err(format!(
            "cannot select {n_beams} codewords from a super-codebook of {super_size}"
        ));
    }
    let bins = beams_in_bin(ula.m, m_small, dominant_bin);
    if bins.is_empty() {
        log::warn!(
            "no {}-element grid beam falls in bin {dominant_bin} of the {m_small}-beam grid; \
             using an unstructured random codebook",
            ula.m
        );
        return random_codebook(ula, n_beams, phase_bits, rng);
    }
    let grid = ula.grid();
    let mut dict = DMatrix::zeros(ula.m, bins.len());
    for (c, &j) in bins.iter().enumerate() {
        dict.set_column(c, &ula.response_spatial(grid.spatial[j]));
    }
    let super_cb = random_codebook(ula, super_size, phase_bits, rng)?;
    let picked = select_correlated(&super_cb.matrix, &dict, n_beams);
    Ok(Codebook {
        matrix: super_cb.matrix.select_columns(picked.iter()),
        kind: CodebookKind::Structured,
        phase_bits: Some(phase_bits),
    })
}
