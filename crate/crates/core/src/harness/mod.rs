//! Monte-Carlo experiments: configuration, trial execution, metrics and
//! result files.

mod config;
mod metrics;
pub mod mismatch;
mod output;
mod run;
pub mod validate;

pub use config::{
    apply_override, expand_sweep, Coherence, ExperimentConfig, MeasurementShape, Method,
    OutputPaths, PinnedAngles, ProbeMode, Scenario, SweepAxis, TruthScope,
};
pub use metrics::{build_table, effective_rate, success_percentage, MetricRow, MetricTable};
pub use output::{emit_results, result_json, table_csv, table_csv_string};
pub use run::{run_experiment, RunResult, Simulation, TrialContext, TrialRecord};
