use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{
    ExperimentConfig, MeasurementShape, Method, PinnedAngles, ProbeMode, Scenario, TruthScope,
};
use super::metrics::{build_table, MetricTable};
use crate::beamsel::{
    lw_omp_select, lw_somp_select, omp_select, somp_select, WeightingConfig,
};
use crate::channel::render::CMatrix;
use crate::channel::{
    generate_multiband, generate_rays, render_freq, render_narrowband_sub6, render_taps,
    BandSpec, ChannelRealization, ClusterParams, MultiBandRealization, RaisedCosine,
};
use crate::codebook::{default_super_size, random_codebook, structured_codebook, Codebook};
use crate::error::Result;
use crate::frontend::{
    beam_powers, beamspace, calibrate_noise, dft_matrix, exhaustive_from_beamspace, measure,
    ranked, BeamPair, MeasurementSet, NoiseModel,
};
use crate::oob::{
    default_training, dominant_indices, estimate_sub6_channel, prior_vector, scale_spectrum,
    spatial_spectrum, PriorVector, SpatialSpectrum,
};
use crate::rng::{substream, Purpose, SimRng};

/// Outcome of one method on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub method: Method,
    /// Codebook shape; `None` for the DFT sweeps.
    pub shape: Option<MeasurementShape>,
    /// Training blocks spent.
    pub n_meas: usize,
    pub pair: BeamPair,
    /// `log2(1 + P_t/(Kσ²) |a_RX^* H[k] a_TX|²)` for every subcarrier `k`.
    pub spectral_efficiency: Vec<f64>,
    /// Position of `pair` in the noiseless power ranking; 0 is the best pair.
    pub truth_rank: usize,
}

impl TrialRecord {
    pub fn mean_spectral_efficiency(&self) -> f64 {
        if self.spectral_efficiency.is_empty() {
            return 0.0;
        }
        self.spectral_efficiency.iter().sum::<f64>() / self.spectral_efficiency.len() as f64
    }
}

/// Everything derived from one trial's channels before any mmWave training.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub trial: usize,
    pub realization: MultiBandRealization,
    /// mmWave `H[k]`, `k = 0..K`.
    pub freq: Vec<CMatrix>,
    pub sub6_channel: CMatrix,
    pub sub6_estimate: CMatrix,
    pub spectrum: SpatialSpectrum,
    /// `(ī*, j̲*)`.
    pub dominant: (usize, usize),
    pub prior: PriorVector,
    /// Subcarrier used by the single-vector selectors.
    pub probe_k: usize,
    /// Subcarriers observed during training.
    pub subcarriers: Vec<usize>,
}

/// Result of a full experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub table: MetricTable,
    pub records: Vec<TrialRecord>,
}

/// A configured experiment with its derived constants.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub config: ExperimentConfig,
    pub mm_noise: NoiseModel,
    pub sub6_noise: NoiseModel,
    mm_pulse: RaisedCosine,
    sub6_pulse: RaisedCosine,
    a_rx: CMatrix,
    a_tx: CMatrix,
    sub6_a_rx: CMatrix,
    sub6_a_tx: CMatrix,
    training: CMatrix,
    weighting: WeightingConfig,
}

impl Simulation {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let mm = &config.mmwave;
        let sub6 = &config.sub6;
        let k = mm.n_subcarriers;
        let mm_noise = calibrate_noise(config.snr_anchor, &mm.pathloss_model(), config.p_t(), k);
        // The sub-6 link is narrowband: one training symbol carries the full
        // per-vector power.
        let sub6_noise =
            calibrate_noise(config.sub6_snr_anchor, &sub6.pathloss_model(), config.sub6_p_t(), 1);
        Ok(Self {
            mm_noise,
            sub6_noise,
            mm_pulse: RaisedCosine::new(mm.sampling_interval(), 1.0),
            sub6_pulse: RaisedCosine::new(sub6.sampling_interval(), 1.0),
            a_rx: dft_matrix(mm.m_rx),
            a_tx: dft_matrix(mm.m_tx),
            sub6_a_rx: dft_matrix(sub6.m_rx),
            sub6_a_tx: dft_matrix(sub6.m_tx),
            training: default_training(sub6.m_tx, config.sub6_p_t()),
            weighting: config.weighting(),
            config,
        })
    }

    fn stream(&self, trial: usize, purpose: Purpose, slot: u32) -> SimRng {
        substream(self.config.seed, trial as u64, purpose, slot)
    }

    /// Cluster and ray draws for `trial`.
    pub fn realization(&self, trial: usize) -> Result<MultiBandRealization> {
        let cfg = &self.config;
        let mut cl = self.stream(trial, Purpose::Clusters, 0);
        let mut r6 = self.stream(trial, Purpose::Sub6Rays, 0);
        let mut rm = self.stream(trial, Purpose::MmwaveRays, 0);
        match cfg.scenario {
            Scenario::Random => generate_multiband(
                &cfg.sub6,
                &cfg.mmwave,
                cfg.distance,
                cfg.generation,
                &mut cl,
                &mut r6,
                &mut rm,
            ),
            Scenario::Pinned(angles) => pinned_realization(cfg, angles, &mut cl, &mut r6, &mut rm),
        }
    }

    /// Channels, sub-6 processing and probe choice for `trial`.
    pub fn prepare(&self, trial: usize) -> Result<TrialContext> {
        let cfg = &self.config;
        let realization = self.realization(trial)?;
        let taps = render_taps(&realization.mmwave, &self.mm_pulse, cfg.mmwave.sampling_interval());
        let freq = render_freq(&taps, cfg.mmwave.n_subcarriers)?;

        let sub6_channel = render_narrowband_sub6(&realization.sub6, &self.sub6_pulse);
        let mut noise_rng = self.stream(trial, Purpose::Sub6Noise, 0);
        let sub6_estimate = estimate_sub6_channel(
            &sub6_channel,
            &self.training,
            self.sub6_noise.sigma2,
            &mut noise_rng,
        )?;
        let spectrum = spatial_spectrum(&sub6_estimate, &self.sub6_a_rx, &self.sub6_a_tx);
        let dominant = dominant_indices(&spectrum);
        let scaled = scale_spectrum(&spectrum, (cfg.mmwave.m_rx, cfg.mmwave.m_tx))?;
        let prior = prior_vector(&scaled, cfg.j_p)?;

        let k_total = cfg.mmwave.n_subcarriers;
        let probe_k = self.stream(trial, Purpose::Probe, 0).random_range(0..k_total);
        let subcarriers = match cfg.probe {
            ProbeMode::SingleK => vec![probe_k],
            ProbeMode::AllK => (0..k_total).collect(),
        };
        Ok(TrialContext {
            trial,
            realization,
            freq,
            sub6_channel,
            sub6_estimate,
            spectrum,
            dominant,
            prior,
            probe_k,
            subcarriers,
        })
    }

    /// Per-subcarrier spectral efficiency of a DFT beam pair over all `K`.
    pub fn spectral_efficiency(&self, freq: &[CMatrix], pair: BeamPair) -> Vec<f64> {
        let snr = self.config.p_t() / (freq.len() as f64 * self.mm_noise.sigma2);
        let a_rx = self.a_rx.column(pair.rx);
        let a_tx = self.a_tx.column(pair.tx);
        freq.iter()
            .map(|h| {
                let v = (h * a_tx).dotc(&a_rx);
                (1.0 + snr * v.norm_sqr()).log2()
            })
            .collect()
    }

    fn random_codebooks(&self, trial: usize, slot: u32, shape: MeasurementShape) -> Result<(Codebook, Codebook)> {
        let mm = &self.config.mmwave;
        let bits = self.config.phase_bits;
        let mut rf = self.stream(trial, Purpose::RandomCodebook, 2 * slot);
        let mut rq = self.stream(trial, Purpose::RandomCodebook, 2 * slot + 1);
        Ok((
            random_codebook(&mm.ula_tx(), shape.n_tx, bits, &mut rf)?,
            random_codebook(&mm.ula_rx(), shape.n_rx, bits, &mut rq)?,
        ))
    }

    fn structured_codebooks(
        &self,
        ctx: &TrialContext,
        slot: u32,
        shape: MeasurementShape,
    ) -> Result<(Codebook, Codebook)> {
        let cfg = &self.config;
        let (mm, sub6) = (&cfg.mmwave, &cfg.sub6);
        let (rx_bin, tx_bin) = ctx.dominant;
        let mut rf = self.stream(ctx.trial, Purpose::StructuredCodebook, 2 * slot);
        let mut rq = self.stream(ctx.trial, Purpose::StructuredCodebook, 2 * slot + 1);
        let f = structured_codebook(
            &mm.ula_tx(),
            tx_bin,
            sub6.m_tx,
            shape.n_tx,
            cfg.super_size.unwrap_or_else(|| default_super_size(shape.n_tx, mm.m_tx)),
            cfg.phase_bits,
            &mut rf,
        )?;
        let q = structured_codebook(
            &mm.ula_rx(),
            rx_bin,
            sub6.m_rx,
            shape.n_rx,
            cfg.super_size.unwrap_or_else(|| default_super_size(shape.n_rx, mm.m_rx)),
            cfg.phase_bits,
            &mut rq,
        )?;
        Ok((f, q))
    }

    fn train(&self, ctx: &TrialContext, f: &Codebook, q: &Codebook, slot: u32) -> Result<MeasurementSet> {
        let mut rng = self.stream(ctx.trial, Purpose::MeasurementNoise, slot);
        measure(
            &ctx.freq,
            f,
            q,
            &self.mm_noise,
            &ctx.subcarriers,
            self.config.p_t(),
            &mut rng,
        )
    }

    fn select(&self, method: Method, ms: &MeasurementSet, ctx: &TrialContext) -> Result<BeamPair> {
        let w = &self.weighting;
        let sel = match method {
            Method::Omp => omp_select(ms, ctx.probe_k)?,
            Method::LwOmp | Method::StructuredLwOmp => lw_omp_select(ms, ctx.probe_k, &ctx.prior, w)?,
            Method::Somp => somp_select(ms)?,
            Method::LwSomp | Method::StructuredLwSomp => lw_somp_select(ms, &ctx.prior, w)?,
            Method::Exhaustive | Method::Oracle => unreachable!("sweeps are not compressive"),
        };
        Ok(sel.pair)
    }

    /// Runs every configured method on one trial.
    pub fn run_trial(&self, trial: usize) -> Result<Vec<TrialRecord>> {
        let ctx = self.prepare(trial)?;
        self.run_prepared(&ctx)
    }

    /// Runs every configured method on an already prepared trial.
    pub fn run_prepared(&self, ctx: &TrialContext) -> Result<Vec<TrialRecord>> {
        let cfg = &self.config;
        let mm = &cfg.mmwave;
        let m_rx = mm.m_rx;
        let beamspaces: Vec<CMatrix> = ctx
            .subcarriers
            .iter()
            .map(|&k| beamspace(&ctx.freq[k], &self.a_rx, &self.a_tx))
            .collect();
        let refs: Vec<&CMatrix> = beamspaces.iter().collect();
        let order = match cfg.truth {
            TruthScope::Probed => ranked(&beam_powers(&refs)),
            TruthScope::AllK => {
                let all: Vec<CMatrix> =
                    ctx.freq.iter().map(|h| beamspace(h, &self.a_rx, &self.a_tx)).collect();
                ranked(&beam_powers(&all.iter().collect::<Vec<_>>()))
            }
        };
        let mut rank_of = vec![0; order.len()];
        for (pos, &r) in order.iter().enumerate() {
            rank_of[r] = pos;
        }
        let record = |method: Method, shape: Option<MeasurementShape>, pair: BeamPair| TrialRecord {
            trial: ctx.trial,
            method,
            shape,
            n_meas: shape.map_or(mm.m_rx * mm.m_tx, |s| s.total()),
            pair,
            spectral_efficiency: self.spectral_efficiency(&ctx.freq, pair),
            truth_rank: rank_of[pair.flat(m_rx)],
        };

        let mut out = Vec::new();
        for &method in cfg.methods.iter().filter(|m| m.is_sweep()) {
            let pair = if method == Method::Oracle {
                BeamPair::from_flat(order[0], m_rx)
            } else {
                let var = self.mm_noise.post_division_variance(cfg.p_t(), mm.n_subcarriers);
                let mut rng = self.stream(ctx.trial, Purpose::ExhaustiveNoise, 0);
                exhaustive_from_beamspace(&refs, var, &mut rng)
            };
            out.push(record(method, None, pair));
        }

        let needs_random = cfg.methods.iter().any(|m| !m.is_sweep() && !m.is_structured());
        let needs_structured = cfg.methods.iter().any(|m| m.is_structured());
        for (s, &shape) in cfg.measurements.iter().enumerate() {
            let s = s as u32;
            let random = if needs_random {
                let (f, q) = self.random_codebooks(ctx.trial, s, shape)?;
                Some(self.train(ctx, &f, &q, 2 * s)?)
            } else {
                None
            };
            let structured = if needs_structured {
                let (f, q) = self.structured_codebooks(ctx, s, shape)?;
                Some(self.train(ctx, &f, &q, 2 * s + 1)?)
            } else {
                None
            };
            for &method in cfg.methods.iter().filter(|m| !m.is_sweep()) {
                let ms = if method.is_structured() { &structured } else { &random };
                let ms = ms.as_ref().expect("measurement set built above");
                let pair = self.select(method, ms, ctx)?;
                out.push(record(method, Some(shape), pair));
            }
        }
        Ok(out)
    }

    /// All trials, in parallel, collected in trial order.
    pub fn run(&self) -> Result<RunResult> {
        let per_trial: Vec<Result<Vec<TrialRecord>>> = (0..self.config.trials)
            .into_par_iter()
            .map(|t| self.run_trial(t))
            .collect();
        let mut records = Vec::new();
        for r in per_trial {
            records.extend(r?);
        }
        let table = build_table(&self.config, &records);
        Ok(RunResult { config: self.config.clone(), table, records })
    }
}

/// Runs an experiment end to end.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunResult> {
    Simulation::new(config.clone())?.run()
}

fn single_cluster<R: Rng + ?Sized>(spec: &BandSpec, aoa: f64, aod: f64, rng: &mut R) -> ClusterParams {
    ClusterParams { tau: spec.tau_max * rng.random::<f64>(), aoa, aod }
}

/// One cluster per band at the pinned mean angles. Cluster counts in the band
/// specs are ignored.
fn pinned_realization<R: Rng + ?Sized>(
    cfg: &ExperimentConfig,
    angles: PinnedAngles,
    cluster_rng: &mut R,
    sub6_ray_rng: &mut R,
    mm_ray_rng: &mut R,
) -> Result<MultiBandRealization> {
    let mut sub6 = cfg.sub6.clone();
    let mut mm = cfg.mmwave.clone();
    sub6.n_clusters = 1;
    mm.n_clusters = 1;
    let c6 = vec![single_cluster(&sub6, angles.sub6_aoa, angles.sub6_aod, cluster_rng)];
    let cm = vec![single_cluster(&mm, angles.mmwave_aoa, angles.mmwave_aod, cluster_rng)];
    let r6 = generate_rays(&c6, &sub6, cfg.generation.rays, sub6_ray_rng);
    let rm = generate_rays(&cm, &mm, cfg.generation.rays, mm_ray_rng);
    let pl6 = sub6.pathloss_model().linear(cfg.distance);
    let plm = mm.pathloss_model().linear(cfg.distance);
    Ok(MultiBandRealization {
        sub6: ChannelRealization::new(sub6, c6, r6, pl6)?,
        mmwave: ChannelRealization::new(mm, cm, rm, plm)?,
        shared_cluster_indices: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Coherence;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.trials = 3;
        c.measurements = vec![MeasurementShape::new(4, 4)];
        c.methods = Method::ALL.to_vec();
        c
    }

    #[test]
    fn one_record_per_method_and_shape() {
        let sim = Simulation::new(small()).unwrap();
        let recs = sim.run_trial(0).unwrap();
        assert_eq!(recs.len(), Method::ALL.len());
        for r in &recs {
            assert_eq!(r.spectral_efficiency.len(), 256);
            assert!(r.spectral_efficiency.iter().all(|&v| v >= 0.0));
        }
        let oracle = recs.iter().find(|r| r.method == Method::Oracle).unwrap();
        assert_eq!(oracle.truth_rank, 0);
        assert_eq!(oracle.n_meas, 1024);
    }

    #[test]
    fn single_k_joint_selectors_match_single_vector_ones() {
        let sim = Simulation::new(small()).unwrap();
        for t in 0..3 {
            let recs = sim.run_trial(t).unwrap();
            let pick = |m| recs.iter().find(|r| r.method == m).unwrap().pair;
            assert_eq!(pick(Method::Omp), pick(Method::Somp));
            assert_eq!(pick(Method::LwOmp), pick(Method::LwSomp));
            assert_eq!(pick(Method::StructuredLwOmp), pick(Method::StructuredLwSomp));
        }
    }

    #[test]
    fn trials_are_independent_of_order() {
        let sim = Simulation::new(small()).unwrap();
        let b = sim.run_trial(2).unwrap();
        let _ = sim.run_trial(0).unwrap();
        assert_eq!(sim.run_trial(2).unwrap(), b);
    }

    #[test]
    fn pinned_scenario_places_single_clusters() {
        let mut c = small();
        c.scenario = Scenario::Pinned(PinnedAngles { sub6_aoa: 0.4, ..Default::default() });
        c.coherence = vec![Coherence::Infinite];
        let sim = Simulation::new(c).unwrap();
        let r = sim.realization(0).unwrap();
        assert_eq!(r.sub6.clusters.len(), 1);
        assert_eq!(r.mmwave.clusters.len(), 1);
        assert_eq!(r.sub6.clusters[0].aoa, 0.4);
        assert_eq!(r.mmwave.clusters[0].aoa, 0.0);
    }

    #[test]
    fn spectral_efficiency_matches_hand_value() {
        let sim = Simulation::new(small()).unwrap();
        let ctx = sim.prepare(1).unwrap();
        let pair = BeamPair { rx: 3, tx: 30 };
        let se = sim.spectral_efficiency(&ctx.freq, pair);
        let snr = sim.config.p_t() / (256.0 * sim.mm_noise.sigma2);
        let (arx, atx) = (dft_matrix(32), dft_matrix(32));
        for k in [0, 100, 255] {
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            for i in 0..32 {
                for j in 0..32 {
                    acc += arx[(i, 3)].conj() * ctx.freq[k][(i, j)] * atx[(j, 30)];
                }
            }
            let want = (1.0 + snr * acc.norm_sqr()).log2();
            assert!((se[k] - want).abs() < 1e-10);
        }
    }
}
