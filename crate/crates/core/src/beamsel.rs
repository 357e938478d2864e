//! Single-step greedy beam-pair selection from compressive measurements.
//!
//! All selectors score every flat beam-pair index `r` by the correlation of
//! sensing column `r` with the measurements and return the argmax. The
//! weighted variants add `J_w logit(p_r)` from a prior.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, input_err, Result};
use crate::frontend::{argmax, BeamPair, MeasurementSet};
use crate::oob::PriorVector;

/// Scale of the logit weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScale {
    Fixed(f64),
    /// Mean of the unweighted score vector, recomputed per selection.
    MeanScore,
    /// `c` times the mean score.
    ScaledMean(f64),
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightingConfig {
    pub j_w: WeightScale,
    pub epsilon_p: f64,
}

impl Default for WeightingConfig {
    /// `J_w` at a tenth of the mean score, calibrated at 40 m on a seed the
    /// experiments do not use.
    fn default() -> Self {
        Self { j_w: WeightScale::ScaledMean(0.1), epsilon_p: 1e-3 }
    }
}

impl WeightingConfig {
    pub fn fixed(j_w: f64) -> Self {
        Self { j_w: WeightScale::Fixed(j_w), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if let WeightScale::Fixed(j) | WeightScale::ScaledMean(j) = self.j_w {
            if !(j > 0.0 && j.is_finite()) {
                return config_err(format!("j_w must be positive and finite, got {j}"));
            }
        }
        if !(self.epsilon_p > 0.0 && self.epsilon_p < 0.5) {
            return config_err(format!("epsilon_p must lie in (0, 1/2), got {}", self.epsilon_p));
        }
        Ok(())
    }

    /// `J_w` given the unweighted scores it is added to.
    pub fn resolve(&self, scores: &[f64]) -> f64 {
        match self.j_w {
            WeightScale::Fixed(j) => j,
            WeightScale::MeanScore => mean(scores),
            WeightScale::ScaledMean(c) => c * mean(scores),
        }
    }

    /// `log(p/(1-p))` with `p` clamped to `[ε, 1-ε]`.
    pub fn logit(&self, p: f64) -> f64 {
        let p = p.clamp(self.epsilon_p, 1.0 - self.epsilon_p);
        (p / (1.0 - p)).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    Omp,
    LwOmp,
    Somp,
    LwSomp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookTag {
    Random,
    Structured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub pair: BeamPair,
    pub scores: Vec<f64>,
    pub selector: Selector,
    pub codebook: CodebookTag,
}

fn tag_of(ms: &MeasurementSet) -> CodebookTag {
    use crate::codebook::CodebookKind;
    if ms.f.kind == CodebookKind::Structured || ms.q.kind == CodebookKind::Structured {
        CodebookTag::Structured
    } else {
        CodebookTag::Random
    }
}

/// `|Ψ^* y|`, one entry per sensing column.
pub fn correlation_scores(psi: &nalgebra::DMatrix<Complex64>, y: &DVector<Complex64>) -> Vec<f64> {
    (psi.adjoint() * y).iter().map(|z| z.norm()).collect()
}

fn finish(ms: &MeasurementSet, scores: Vec<f64>, selector: Selector) -> SelectionResult {
    SelectionResult {
        pair: BeamPair::from_flat(argmax(&scores), ms.m_rx()),
        scores,
        selector,
        codebook: tag_of(ms),
    }
}

fn weighted(mut scores: Vec<f64>, prior: &PriorVector, w: &WeightingConfig) -> Result<Vec<f64>> {
    if prior.p.len() != scores.len() {
        return input_err(format!(
            "prior has {} entries, expected {}",
            prior.p.len(),
            scores.len()
        ));
    }
    let j_w = w.resolve(&scores);
    for (s, &p) in scores.iter_mut().zip(&prior.p) {
        *s += j_w * w.logit(p);
    }
    Ok(scores)
}

fn single(ms: &MeasurementSet, k: usize) -> Result<Vec<f64>> {
    match ms.for_subcarrier(k) {
        Some(y) => Ok(correlation_scores(&ms.psi, y)),
        None => input_err(format!("subcarrier {k} was not probed")),
    }
}

fn summed(ms: &MeasurementSet) -> Result<Vec<f64>> {
    if ms.y.is_empty() {
        return input_err("no probed subcarriers");
    }
    // Fixed summation order keeps the result independent of threading.
    let per_k: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        ms.y.par_iter().map(|y| correlation_scores(&ms.psi, y)).collect()
    };
    let mut acc = vec![0.0; per_k[0].len()];
    for s in &per_k {
        for (a, v) in acc.iter_mut().zip(s) {
            *a += v;
        }
    }
    Ok(acc)
}

pub fn omp_select(ms: &MeasurementSet, k: usize) -> Result<SelectionResult> {
    Ok(finish(ms, single(ms, k)?, Selector::Omp))
}

pub fn lw_omp_select(
    ms: &MeasurementSet,
    k: usize,
    prior: &PriorVector,
    w: &WeightingConfig,
) -> Result<SelectionResult> {
    let scores = weighted(single(ms, k)?, prior, w)?;
    Ok(finish(ms, scores, Selector::LwOmp))
}

pub fn somp_select(ms: &MeasurementSet) -> Result<SelectionResult> {
    Ok(finish(ms, summed(ms)?, Selector::Somp))
}

pub fn lw_somp_select(
    ms: &MeasurementSet,
    prior: &PriorVector,
    w: &WeightingConfig,
) -> Result<SelectionResult> {
    let scores = weighted(summed(ms)?, prior, w)?;
    Ok(finish(ms, scores, Selector::LwSomp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::render::CMatrix;
    use crate::codebook::{dft_codebook, random_codebook, Ula};
    use crate::frontend::{dft_matrix, from_beamspace, measure, NoiseModel};
    use crate::rng::seeded;

    fn planted(m: usize, rx: usize, tx: usize) -> CMatrix {
        let mut g = CMatrix::zeros(m, m);
        g[(rx, tx)] = Complex64::new(1.0, 0.0);
        from_beamspace(&g, &dft_matrix(m), &dft_matrix(m))
    }

    fn probe(h: &CMatrix, n: usize, seed: u64, noise: f64) -> MeasurementSet {
        let m = h.nrows();
        let mut rng = seeded(seed);
        let f = random_codebook(&Ula::half_wave(m), n, 2, &mut rng).unwrap();
        let q = random_codebook(&Ula::half_wave(m), n, 2, &mut rng).unwrap();
        measure(std::slice::from_ref(h), &f, &q, &NoiseModel::new(noise), &[0], 1.0, &mut rng).unwrap()
    }

    fn brute(ms: &MeasurementSet, y: &DVector<Complex64>) -> Vec<f64> {
        (0..ms.psi.ncols())
            .map(|r| {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..ms.psi.nrows() {
                    acc += ms.psi[(i, r)].conj() * y[i];
                }
                acc.norm()
            })
            .collect()
    }

    #[test]
    fn full_dft_training_recovers_planted_pair() {
        let dft = dft_codebook(&Ula::half_wave(8));
        for (rx, tx) in [(5, 2), (0, 7), (3, 3)] {
            let h = planted(8, rx, tx);
            let ms = measure(&[h], &dft, &dft, &NoiseModel::noiseless(), &[0], 1.0, &mut seeded(0))
                .unwrap();
            assert_eq!(omp_select(&ms, 0).unwrap().pair, BeamPair { rx, tx });
            assert_eq!(somp_select(&ms).unwrap().pair, BeamPair { rx, tx });
        }
    }

    #[test]
    fn scores_match_loop() {
        let h = planted(8, 1, 6);
        let ms = probe(&h, 3, 3, 0.01);
        let sel = omp_select(&ms, 0).unwrap();
        for (a, b) in sel.scores.iter().zip(brute(&ms, &ms.y[0])) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unprobed_subcarrier_is_an_error() {
        let ms = probe(&planted(4, 0, 0), 2, 0, 0.0);
        assert!(omp_select(&ms, 3).is_err());
    }

    #[test]
    fn somp_on_one_subcarrier_equals_omp() {
        let ms = probe(&planted(8, 3, 3), 4, 9, 0.1);
        assert_eq!(somp_select(&ms).unwrap().scores, omp_select(&ms, 0).unwrap().scores);
    }

    #[test]
    fn uniform_prior_keeps_argmax() {
        let ms = probe(&planted(8, 3, 4), 3, 5, 0.5);
        let prior = PriorVector::uniform(64, 0.3);
        let a = omp_select(&ms, 0).unwrap().pair;
        let b = lw_omp_select(&ms, 0, &prior, &WeightingConfig::default()).unwrap().pair;
        assert_eq!(a, b);
    }

    #[test]
    fn huge_weight_follows_prior() {
        let ms = probe(&planted(8, 3, 4), 3, 5, 0.0);
        let mut prior = PriorVector::uniform(64, 0.1);
        prior.p[17] = 0.9;
        let sel = lw_somp_select(&ms, &prior, &WeightingConfig::fixed(1e9)).unwrap();
        assert_eq!(sel.pair.flat(8), 17);
    }

    #[test]
    fn prior_length_mismatch() {
        let ms = probe(&planted(4, 0, 0), 2, 0, 0.0);
        let prior = PriorVector::uniform(3, 0.5);
        assert!(lw_omp_select(&ms, 0, &prior, &WeightingConfig::default()).is_err());
    }

    #[test]
    fn logit_is_clamped() {
        let w = WeightingConfig::default();
        assert!((w.logit(0.0) - (1e-3f64 / (1.0 - 1e-3)).ln()).abs() < 1e-12);
        assert_eq!(w.logit(0.5), 0.0);
        assert!(w.logit(1.0).is_finite());
    }

    #[test]
    fn scaled_mean_resolves_against_scores() {
        let s = [1.0, 2.0, 6.0];
        assert_eq!(WeightingConfig::fixed(4.0).resolve(&s), 4.0);
        let w = WeightingConfig { j_w: WeightScale::MeanScore, epsilon_p: 1e-3 };
        assert_eq!(w.resolve(&s), 3.0);
        let w = WeightingConfig { j_w: WeightScale::ScaledMean(0.5), epsilon_p: 1e-3 };
        assert_eq!(w.resolve(&s), 1.5);
        assert!(WeightingConfig { j_w: WeightScale::ScaledMean(0.0), epsilon_p: 1e-3 }.validate().is_err());
    }

    #[test]
    fn weighting_validation() {
        assert!(WeightingConfig::fixed(-1.0).validate().is_err());
        assert!(WeightingConfig { epsilon_p: 0.5, ..Default::default() }.validate().is_err());
        assert!(WeightingConfig::default().validate().is_ok());
    }
}
