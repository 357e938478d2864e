use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::beamsel::{WeightScale, WeightingConfig};
use crate::channel::{BandSpec, GenerationOptions};
use crate::error::{config_err, Result};
use crate::frontend::{dbm_to_watts, SnrAnchor};

/// Beam-selection strategy compared by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exhaustive,
    /// Noiseless exhaustive search; the ground truth, charged like
    /// [`Method::Exhaustive`].
    Oracle,
    Omp,
    LwOmp,
    StructuredLwOmp,
    Somp,
    LwSomp,
    StructuredLwSomp,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Exhaustive,
        Method::Oracle,
        Method::Omp,
        Method::LwOmp,
        Method::StructuredLwOmp,
        Method::Somp,
        Method::LwSomp,
        Method::StructuredLwSomp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Exhaustive => "exhaustive",
            Method::Oracle => "oracle",
            Method::Omp => "omp",
            Method::LwOmp => "lw_omp",
            Method::StructuredLwOmp => "structured_lw_omp",
            Method::Somp => "somp",
            Method::LwSomp => "lw_somp",
            Method::StructuredLwSomp => "structured_lw_somp",
        }
    }

    pub fn is_structured(&self) -> bool {
        matches!(self, Method::StructuredLwOmp | Method::StructuredLwSomp)
    }

    pub fn is_weighted(&self) -> bool {
        matches!(
            self,
            Method::LwOmp | Method::StructuredLwOmp | Method::LwSomp | Method::StructuredLwSomp
        )
    }

    /// Sweeps every DFT pair instead of compressive training.
    pub fn is_sweep(&self) -> bool {
        matches!(self, Method::Exhaustive | Method::Oracle)
    }

    /// Uses all probed subcarriers jointly.
    pub fn is_joint(&self) -> bool {
        matches!(self, Method::Somp | Method::LwSomp | Method::StructuredLwSomp)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which subcarriers are probed during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMode {
    /// One subcarrier drawn uniformly per trial.
    #[default]
    SingleK,
    AllK,
}

/// Subcarriers over which the noiseless ground-truth ranking sums power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthScope {
    /// The subcarriers the selectors observe.
    #[default]
    Probed,
    AllK,
}

/// Channel coherence time in OFDM blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coherence {
    Blocks(f64),
    Infinite,
}

impl Coherence {
    /// `max(0, 1 - n/T_c)`.
    pub fn efficiency(&self, n_meas: usize) -> f64 {
        match self {
            Coherence::Infinite => 1.0,
            Coherence::Blocks(t) => (1.0 - n_meas as f64 / t).max(0.0),
        }
    }
}

impl fmt::Display for Coherence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coherence::Blocks(t) => write!(f, "{t}"),
            Coherence::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Coherence {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Coherence::Blocks(t) => s.serialize_f64(*t),
            Coherence::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Coherence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(t) => Ok(Coherence::Blocks(t)),
            Raw::Text(s) => match s.as_str() {
                "inf" | "infinite" | "Infinity" => Ok(Coherence::Infinite),
                other => other
                    .parse::<f64>()
                    .map(Coherence::Blocks)
                    .map_err(|_| serde::de::Error::custom(format!("bad coherence time {other:?}"))),
            },
        }
    }
}

/// Training codebook sizes `N_RX x N_TX`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementShape {
    pub n_rx: usize,
    pub n_tx: usize,
}

impl MeasurementShape {
    pub fn new(n_rx: usize, n_tx: usize) -> Self {
        Self { n_rx, n_tx }
    }

    pub fn total(&self) -> usize {
        self.n_rx * self.n_tx
    }
}

/// How cluster geometry is produced each trial.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Full two-stage random generation.
    #[default]
    Random,
    /// One cluster per band at fixed mean angles; delays and rays stay random.
    Pinned(PinnedAngles),
}

/// Mean cluster angles for [`Scenario::Pinned`], rad.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PinnedAngles {
    #[serde(default)]
    pub sub6_aoa: f64,
    #[serde(default)]
    pub sub6_aod: f64,
    #[serde(default)]
    pub mmwave_aoa: f64,
    #[serde(default)]
    pub mmwave_aod: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
    /// Include every trial record in the JSON output.
    #[serde(default)]
    pub records: bool,
}

fn default_distance() -> f64 {
    40.0
}
fn default_shapes() -> Vec<MeasurementShape> {
    vec![
        MeasurementShape::new(4, 8),
        MeasurementShape::new(8, 8),
        MeasurementShape::new(8, 16),
    ]
}
fn default_coherence() -> Vec<Coherence> {
    vec![Coherence::Blocks(6144.0)]
}
fn default_trials() -> usize {
    200
}
fn default_methods() -> Vec<Method> {
    vec![
        Method::Exhaustive,
        Method::Omp,
        Method::LwOmp,
        Method::StructuredLwOmp,
    ]
}
fn default_seed() -> u64 {
    2017
}
fn default_j_p() -> f64 {
    0.5
}
fn default_epsilon() -> f64 {
    1e-3
}
fn default_mm_anchor() -> SnrAnchor {
    SnrAnchor { distance: 80.0, snr_db: -10.0 }
}
fn default_sub6_anchor() -> SnrAnchor {
    SnrAnchor { distance: 80.0, snr_db: 10.0 }
}
fn default_power() -> f64 {
    37.0
}
fn default_phase_bits() -> u32 {
    5
}
fn default_success_n() -> Vec<usize> {
    vec![1, 5]
}
fn default_j_w() -> WeightScale {
    WeightingConfig::default().j_w
}

/// Everything a run needs. Every field has a default, so `{}` is a valid
/// configuration describing the 40 m single-subcarrier experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "BandSpec::sub6_default")]
    pub sub6: BandSpec,
    #[serde(default = "BandSpec::mmwave_default")]
    pub mmwave: BandSpec,
    /// TX-RX separation, m.
    #[serde(default = "default_distance")]
    pub distance: f64,
    #[serde(default = "default_shapes")]
    pub measurements: Vec<MeasurementShape>,
    #[serde(default = "default_coherence")]
    pub coherence: Vec<Coherence>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub probe: ProbeMode,
    #[serde(default)]
    pub truth: TruthScope,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_j_p")]
    pub j_p: f64,
    #[serde(default = "default_j_w")]
    pub j_w: WeightScale,
    #[serde(default = "default_epsilon")]
    pub epsilon_p: f64,
    #[serde(default = "default_mm_anchor")]
    pub snr_anchor: SnrAnchor,
    #[serde(default = "default_sub6_anchor")]
    pub sub6_snr_anchor: SnrAnchor,
    /// mmWave OFDM block power, dBm.
    #[serde(default = "default_power")]
    pub p_t_dbm: f64,
    /// Sub-6 power per training vector, dBm.
    #[serde(default = "default_power")]
    pub sub6_p_t_dbm: f64,
    #[serde(default = "default_phase_bits")]
    pub phase_bits: u32,
    /// Structured super-codebook size; `None` picks `4 max(N, M)` per side.
    #[serde(default)]
    pub super_size: Option<usize>,
    #[serde(default)]
    pub generation: GenerationOptions,
    #[serde(default)]
    pub scenario: Scenario,
    /// `N` values of the reported `SP(B_N)` columns.
    #[serde(default = "default_success_n")]
    pub success_n: Vec<usize>,
    #[serde(default)]
    pub output: OutputPaths,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config deserializes")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| crate::Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| crate::Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.sub6.validate()?;
        self.mmwave.validate()?;
        if self.mmwave.n_subcarriers == 0 || self.mmwave.n_taps == 0 {
            return config_err("the mmWave band needs taps and subcarriers");
        }
        if !(self.distance > 0.0) {
            return config_err("distance must be positive");
        }
        if self.trials == 0 {
            return config_err("trials must be at least 1");
        }
        if self.methods.is_empty() {
            return config_err("methods must not be empty");
        }
        let compressive = self.methods.iter().any(|m| !m.is_sweep());
        if compressive && self.measurements.is_empty() {
            return config_err("compressive methods need at least one measurement shape");
        }
        for s in &self.measurements {
            if s.n_rx == 0 || s.n_tx == 0 {
                return config_err("measurement shapes must be positive");
            }
        }
        if self.coherence.is_empty() {
            return config_err("coherence must list at least one value");
        }
        for c in &self.coherence {
            if let Coherence::Blocks(t) = c {
                if !(*t > 0.0) {
                    return config_err(format!("coherence time must be positive, got {t}"));
                }
            }
        }
        if !(self.j_p > 0.0 && self.j_p <= 1.0) {
            return config_err(format!("j_p must lie in (0, 1], got {}", self.j_p));
        }
        self.weighting().validate()?;
        if self.phase_bits == 0 || self.phase_bits > 16 {
            return config_err("phase_bits must be in 1..=16");
        }
        if self.success_n.iter().any(|&n| n == 0) {
            return config_err("success_n entries must be positive");
        }
        for a in [self.snr_anchor, self.sub6_snr_anchor] {
            if !(a.distance > 0.0 && a.snr_db.is_finite()) {
                return config_err("SNR anchors need a positive distance and finite SNR");
            }
        }
        if let Some(s) = self.super_size {
            let need = self.measurements.iter().map(|m| m.n_rx.max(m.n_tx)).max().unwrap_or(0);
            if s < need {
                return config_err(format!("super_size {s} is smaller than a codebook ({need})"));
            }
        }
        if self.probe == ProbeMode::SingleK && self.methods.iter().any(|m| m.is_joint()) {
            log::warn!("joint (SOMP) methods with single_k probing see a single subcarrier");
        }
        Ok(())
    }

    pub fn weighting(&self) -> WeightingConfig {
        WeightingConfig { j_w: self.j_w, epsilon_p: self.epsilon_p }
    }

    pub fn p_t(&self) -> f64 {
        dbm_to_watts(self.p_t_dbm)
    }

    pub fn sub6_p_t(&self) -> f64 {
        dbm_to_watts(self.sub6_p_t_dbm)
    }

    /// Configuration minus output paths, which do not affect results.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.output = OutputPaths::default();
        serde_json::to_string(&c).expect("config serializes")
    }

    /// Hex SHA-256 of [`canonical_json`](Self::canonical_json).
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Applies `key.path=value` overrides to a config through its JSON tree.
/// Values parse as JSON when possible, otherwise as strings.
pub fn apply_override(cfg: &ExperimentConfig, key: &str, value: &str) -> Result<ExperimentConfig> {
    let mut tree = serde_json::to_value(cfg)?;
    let parsed: serde_json::Value =
        serde_json::from_str(value).unwrap_or_else(|_| serde_json::Value::String(value.to_string()));
    let mut node = &mut tree;
    for part in key.split('.') {
        // Unit-like variants serialize as strings; descending through one
        // switches to a struct variant such as scenario.pinned.
        if !node.is_object() {
            *node = serde_json::Value::Object(Default::default());
        }
        let serde_json::Value::Object(map) = node else {
            unreachable!("made an object above");
        };
        node = map
            .entry(part.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    *node = parsed;
    let out: ExperimentConfig =
        serde_json::from_value(tree).map_err(|e| crate::Error::Config(format!("{key}: {e}")))?;
    out.validate()?;
    Ok(out)
}

/// One sweep axis: every key in `keys` receives the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub keys: Vec<String>,
    pub values: Vec<String>,
}

impl SweepAxis {
    /// Parses `a.b+c.d=v1,v2,...`. JSON arrays or objects as values are not
    /// split, so use one axis per such value.
    pub fn parse(spec: &str) -> Result<Self> {
        let Some((k, v)) = spec.split_once('=') else {
            return config_err(format!("sweep axis {spec:?} lacks '='"));
        };
        let keys: Vec<String> = k.split('+').map(|s| s.trim().to_string()).collect();
        if keys.iter().any(|s| s.is_empty()) {
            return config_err(format!("empty key in sweep axis {spec:?}"));
        }
        let values: Vec<String> = if v.trim_start().starts_with(['[', '{']) {
            vec![v.to_string()]
        } else {
            v.split(',').map(|s| s.trim().to_string()).collect()
        };
        if values.iter().any(|s| s.is_empty()) {
            return config_err(format!("empty value in sweep axis {spec:?}"));
        }
        Ok(Self { keys, values })
    }
}

/// Cartesian product of the axes applied to `base`, with a label per point.
pub fn expand_sweep(
    base: &ExperimentConfig,
    axes: &[SweepAxis],
) -> Result<Vec<(Vec<(String, String)>, ExperimentConfig)>> {
    let mut points = vec![(Vec::new(), base.clone())];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for (label, cfg) in &points {
            for v in &axis.values {
                let mut c = cfg.clone();
                for k in &axis.keys {
                    c = apply_override(&c, k, v)?;
                }
                let mut l = label.clone();
                l.push((axis.keys.join("+"), v.clone()));
                next.push((l, c));
            }
        }
        points = next;
    }
    Ok(points)
}
