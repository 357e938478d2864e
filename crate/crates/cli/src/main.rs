use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use oobeam::codebook::{random_codebook, structured_codebook, default_super_size};
use oobeam::harness::{
    emit_results, expand_sweep, result_json, run_experiment, table_csv_string, validate,
    ExperimentConfig, Simulation, SweepAxis,
};
use oobeam::rng::{substream, Purpose};

#[derive(Parser)]
#[command(name = "oobeam", version, about = "Out-of-band aided mmWave beam-selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Overrides `output.csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Overrides `output.json`.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Overrides `trials`.
        #[arg(long)]
        trials: Option<usize>,
        /// Overrides `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a grid of overrides on top of a config.
    Sweep {
        config: PathBuf,
        /// `key.path=v1,v2,...`; join keys with `+` to set them together.
        #[arg(long = "set", required = true)]
        axes: Vec<String>,
        /// Directory for sweep.csv and sweep.json.
        #[arg(long, default_value = "sweep-out")]
        out_dir: PathBuf,
    },
    /// Run the built-in invariant checks.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Export one trial's realization, codebooks and sub-6 spectrum.
    DumpChannel {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long, default_value = "channel-dump")]
        out_dir: PathBuf,
    },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<oobeam::Error> for Failure {
    fn from(e: oobeam::Error) -> Self {
        match e {
            oobeam::Error::Config(_) => Failure::Config(e.into()),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    Ok(ExperimentConfig::from_path(path)?)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_run(
    config: &Path,
    csv: Option<PathBuf>,
    json: Option<PathBuf>,
    trials: Option<usize>,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let mut cfg = load(config)?;
    if csv.is_some() {
        cfg.output.csv = csv;
    }
    if json.is_some() {
        cfg.output.json = json;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let sim = Simulation::new(cfg)?;
    let result = sim.run()?;
    emit_results(&result, Some(sim.mm_noise.sigma2))?;
    if result.config.output.csv.is_none() {
        print!("{}", table_csv_string(&result.table)?);
    }
    Ok(())
}

fn cmd_sweep(config: &Path, axes: &[String], out_dir: &Path) -> Result<(), Failure> {
    let base = load(config)?;
    let axes = axes.iter().map(|a| SweepAxis::parse(a)).collect::<Result<Vec<_>, _>>()?;
    let points = expand_sweep(&base, &axes)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut docs = Vec::new();
    for (i, (label, cfg)) in points.iter().enumerate() {
        log::info!("sweep point {}/{}: {label:?}", i + 1, points.len());
        let result = run_experiment(cfg)?;
        let table = table_csv_string(&result.table)?;
        let mut lines = table.lines();
        let header = lines.next().unwrap_or_default();
        if i == 0 {
            let mut h: Vec<String> = label.iter().map(|(k, _)| k.clone()).collect();
            h.extend(header.split(',').map(str::to_string));
            w.write_record(&h).context("csv")?;
        }
        for line in lines {
            let mut rec: Vec<String> = label.iter().map(|(_, v)| v.clone()).collect();
            rec.extend(line.split(',').map(str::to_string));
            w.write_record(&rec).context("csv")?;
        }
        let doc: serde_json::Value = serde_json::from_str(&result_json(&result, false, None)?)
            .context("re-reading result json")?;
        docs.push(serde_json::json!({
            "point": label
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect::<serde_json::Map<_, _>>(),
            "result": doc,
        }));
    }
    let bytes = w.into_inner().context("flushing csv")?;
    fs::write(out_dir.join("sweep.csv"), bytes).context("writing sweep.csv")?;
    write(
        &out_dir.join("sweep.json"),
        &serde_json::to_string_pretty(&docs).context("serializing sweep")?,
    )?;
    Ok(())
}

fn cmd_validate(seed: u64) -> Result<bool, Failure> {
    let checks = validate::run_validation(seed);
    let mut ok = true;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        ok &= c.passed;
    }
    Ok(ok)
}

fn cmd_dump(config: &Path, trial: usize, out_dir: &Path) -> Result<(), Failure> {
    let cfg = load(config)?;
    let sim = Simulation::new(cfg)?;
    let ctx = sim.prepare(trial)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write(
        &out_dir.join("realization.json"),
        &serde_json::to_string_pretty(&ctx.realization).context("realization")?,
    )?;
    write(&out_dir.join("sub6_spectrum.csv"), &ctx.spectrum.to_csv())?;

    let cfg = &sim.config;
    let mm = &cfg.mmwave;
    let mut codebooks = serde_json::Map::new();
    if let Some(shape) = cfg.measurements.first() {
        let mut r = substream(cfg.seed, trial as u64, Purpose::RandomCodebook, 0);
        let f = random_codebook(&mm.ula_tx(), shape.n_tx, cfg.phase_bits, &mut r)?;
        let mut r = substream(cfg.seed, trial as u64, Purpose::StructuredCodebook, 0);
        let sf = structured_codebook(
            &mm.ula_tx(),
            ctx.dominant.1,
            cfg.sub6.m_tx,
            shape.n_tx,
            cfg.super_size.unwrap_or_else(|| default_super_size(shape.n_tx, mm.m_tx)),
            cfg.phase_bits,
            &mut r,
        )?;
        codebooks.insert("random_precoder".into(), serde_json::to_value(f.to_json()).context("codebook")?);
        codebooks.insert("structured_precoder".into(), serde_json::to_value(sf.to_json()).context("codebook")?);
    }
    write(
        &out_dir.join("codebooks.json"),
        &serde_json::to_string_pretty(&codebooks).context("codebooks")?,
    )?;
    let summary = serde_json::json!({
        "trial": trial,
        "dominant_rx_bin": ctx.dominant.0,
        "dominant_tx_bin": ctx.dominant.1,
        "probe_subcarrier": ctx.probe_k,
        "config_hash": cfg.hash(),
    });
    write(&out_dir.join("summary.json"), &serde_json::to_string_pretty(&summary).context("summary")?)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run { config, csv, json, trials, seed } => cmd_run(&config, csv, json, trials, seed),
        Command::Sweep { config, axes, out_dir } => cmd_sweep(&config, &axes, &out_dir),
        Command::Validate { seed } => match cmd_validate(seed) {
            Ok(true) => Ok(()),
            Ok(false) => Err(Failure::Runtime(anyhow::anyhow!("validation failed"))),
            Err(e) => Err(e),
        },
        Command::DumpChannel { config, trial, out_dir } => cmd_dump(&config, trial, &out_dir),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
