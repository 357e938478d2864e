use serde::{Deserialize, Serialize};

use super::config::{Coherence, ExperimentConfig, MeasurementShape, Method};
use super::run::TrialRecord;

/// `η/(E K) Σ_e Σ_k SE_e[k]` with `η = max(0, 1 − n_meas/T_c)`.
pub fn effective_rate(records: &[&TrialRecord], coherence: Coherence, n_meas: usize) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let mean = records.iter().map(|r| r.mean_spectral_efficiency()).sum::<f64>()
        / records.len() as f64;
    coherence.efficiency(n_meas) * mean
}

/// Percentage of records whose pick lies among the `n` best noiseless pairs.
pub fn success_percentage(records: &[&TrialRecord], n: usize) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let hits = records.iter().filter(|r| r.truth_rank < n).count();
    100.0 * hits as f64 / records.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub method: Method,
    pub shape: Option<MeasurementShape>,
    pub n_meas: usize,
    pub coherence: Coherence,
    pub r_eff: f64,
    /// `SP(B_N)` in percent, aligned with [`MetricTable::success_n`].
    pub success: Vec<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MetricTable {
    pub success_n: Vec<usize>,
    pub rows: Vec<MetricRow>,
}

impl MetricTable {
    pub fn find(&self, method: Method, n_meas: usize, coherence: Coherence) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.n_meas == n_meas && r.coherence == coherence)
    }

    /// `SP(B_n)` of a row, when `n` is one of the reported sizes.
    pub fn success(&self, row: &MetricRow, n: usize) -> Option<f64> {
        self.success_n.iter().position(|&x| x == n).map(|i| row.success[i])
    }
}

/// Aggregates records into rows ordered by method (config order), shape
/// (config order), then coherence (config order).
pub fn build_table(cfg: &ExperimentConfig, records: &[TrialRecord]) -> MetricTable {
    let mut rows = Vec::new();
    let mut groups: Vec<(Method, Option<MeasurementShape>)> = Vec::new();
    for &m in &cfg.methods {
        if m.is_sweep() {
            groups.push((m, None));
        } else {
            groups.extend(cfg.measurements.iter().map(|&s| (m, Some(s))));
        }
    }
    for (method, shape) in groups {
        let sel: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.method == method && r.shape == shape)
            .collect();
        let Some(first) = sel.first() else { continue };
        let n_meas = first.n_meas;
        for &coherence in &cfg.coherence {
            rows.push(MetricRow {
                method,
                shape,
                n_meas,
                coherence,
                r_eff: effective_rate(&sel, coherence, n_meas),
                success: cfg.success_n.iter().map(|&n| success_percentage(&sel, n)).collect(),
                trials: sel.len(),
            });
        }
    }
    MetricTable { success_n: cfg.success_n.clone(), rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::BeamPair;

    fn rec(se: Vec<f64>, rank: usize) -> TrialRecord {
        TrialRecord {
            trial: 0,
            method: Method::Omp,
            shape: Some(MeasurementShape::new(1, 1)),
            n_meas: 1,
            pair: BeamPair { rx: 0, tx: 0 },
            spectral_efficiency: se,
            truth_rank: rank,
        }
    }

    #[test]
    fn rate_is_zero_when_training_eats_coherence() {
        let r = rec(vec![3.0], 0);
        assert_eq!(effective_rate(&[&r], Coherence::Blocks(64.0), 64), 0.0);
        assert_eq!(effective_rate(&[&r], Coherence::Blocks(32.0), 64), 0.0);
    }

    #[test]
    fn rate_averages_trials_and_subcarriers() {
        let a = rec(vec![1.0, 3.0], 0);
        let b = rec(vec![2.0, 2.0], 0);
        let r = effective_rate(&[&a, &b], Coherence::Blocks(4.0), 1);
        assert!((r - 0.75 * 2.0).abs() < 1e-15);
    }

    #[test]
    fn success_counts_ranks() {
        let recs = [rec(vec![], 0), rec(vec![], 3), rec(vec![], 7), rec(vec![], 1)];
        let refs: Vec<&TrialRecord> = recs.iter().collect();
        assert_eq!(success_percentage(&refs, 1), 25.0);
        assert_eq!(success_percentage(&refs, 5), 75.0);
        assert_eq!(success_percentage(&refs, 8), 100.0);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(effective_rate(&[], Coherence::Infinite, 1), 0.0);
        assert_eq!(success_percentage(&[], 1), 0.0);
        let cfg = ExperimentConfig::default();
        assert!(build_table(&cfg, &[]).rows.is_empty());
    }
}
