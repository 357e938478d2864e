use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::metrics::MetricTable;
use super::run::{RunResult, TrialRecord};
use crate::error::Result;

/// CSV with one row per metric cell:
/// `method,n_meas,T_c,R_eff,SP_B<n>...,E`.
pub fn table_csv<W: Write>(table: &MetricTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["method".to_string(), "n_meas".into(), "T_c".into(), "R_eff".into()];
    header.extend(table.success_n.iter().map(|n| format!("SP_B{n}")));
    header.push("E".into());
    w.write_record(&header)?;
    for row in &table.rows {
        let mut rec = vec![
            row.method.name().to_string(),
            row.n_meas.to_string(),
            row.coherence.to_string(),
            row.r_eff.to_string(),
        ];
        rec.extend(row.success.iter().map(|s| s.to_string()));
        rec.push(row.trials.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn table_csv_string(table: &MetricTable) -> Result<String> {
    let mut buf = Vec::new();
    table_csv(table, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[derive(Debug, Serialize)]
struct Metadata<'a> {
    generator: &'a str,
    version: &'a str,
    trials: usize,
    mmwave_noise_sigma2: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Document<'a> {
    config: &'a ExperimentConfig,
    config_hash: String,
    seed: u64,
    metadata: Metadata<'a>,
    table: &'a MetricTable,
    #[serde(skip_serializing_if = "Option::is_none")]
    records: Option<&'a [TrialRecord]>,
}

/// JSON document with the config, its hash, the seed and the table; trial
/// records are included when `with_records` is set.
pub fn result_json(result: &RunResult, with_records: bool, sigma2: Option<f64>) -> Result<String> {
    let doc = Document {
        config: &result.config,
        config_hash: result.config.hash(),
        seed: result.config.seed,
        metadata: Metadata {
            generator: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            trials: result.config.trials,
            mmwave_noise_sigma2: sigma2,
        },
        table: &result.table,
        records: with_records.then_some(result.records.as_slice()),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Writes the CSV and JSON outputs named in the config, if any.
pub fn emit_results(result: &RunResult, sigma2: Option<f64>) -> Result<()> {
    let out = &result.config.output;
    if let Some(p) = &out.csv {
        write_atomic(p, table_csv_string(&result.table)?.as_bytes())?;
    }
    if let Some(p) = &out.json {
        write_atomic(p, result_json(result, out.records, sigma2)?.as_bytes())?;
    }
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes)?;
    Ok(())
}
