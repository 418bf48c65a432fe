//! JSON run configurations. Every physical key carries its unit; missing keys
//! take the defaults below, unknown keys are rejected.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use cqed_core::hom::{
    HomAnalysisParams, SyntheticHistogram, DEFAULT_HOM_DELAY_NS, DEFAULT_REP_PERIOD_NS,
};
use cqed_core::{
    DephasingMode, DeviceConfig, QuadSettings, SidebandGrid, SolverSettings, SweepParameter,
    SweepSpec,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// File written next to every output.
pub const SIDECAR: &str = "resolved_config.json";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<cqed_core::Error> for CliError {
    fn from(e: cqed_core::Error) -> Self {
        match e {
            cqed_core::Error::Io(_) | cqed_core::Error::Csv(_) => CliError::Io(e.to_string()),
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// A preset name or a full inline device.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeviceRef {
    Preset(String),
    Inline(DeviceConfig),
}

impl DeviceRef {
    pub fn resolve(&self) -> CliResult<DeviceConfig> {
        let d = match self {
            DeviceRef::Preset(name) => DeviceConfig::preset(name)
                .ok_or_else(|| CliError::Config(format!("unknown device preset `{name}`")))?,
            DeviceRef::Inline(d) => d.clone(),
        };
        d.validate()?;
        Ok(d)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub device: DeviceRef,
    #[serde(rename = "temperatures_K")]
    pub temperatures_k: Vec<f64>,
    /// Half-width of the detuning window.
    #[serde(rename = "window_ueV")]
    pub window_uev: f64,
    /// Geometric points per side outside the ZPL core.
    pub log_points: usize,
    pub dephasing: DephasingMode,
    pub quadrature: QuadSettings,
    pub sideband: SidebandGrid,
    pub output_dir: Option<PathBuf>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            device: DeviceRef::Preset("device2".into()),
            temperatures_k: vec![9.0, 20.0],
            window_uev: 4000.0,
            log_points: 800,
            dephasing: DephasingMode::Full,
            quadrature: QuadSettings::default(),
            sideband: SidebandGrid::default(),
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub device: DeviceRef,
    pub sweep: SweepSpec,
    /// Also run the sweep without pure dephasing and write the paired table.
    pub counterfactual: bool,
    pub solver: SolverSettings,
    pub output_dir: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            device: DeviceRef::Preset("device1".into()),
            sweep: SweepSpec::linear(SweepParameter::Temperature, 0.0, 20.0, 11),
            counterfactual: false,
            solver: SolverSettings::default(),
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomConfig {
    /// Autocorrelation histogram (delay_ns, counts).
    pub hbt_file: Option<PathBuf>,
    /// Two-photon interference histogram (delay_ns, counts).
    pub hom_file: Option<PathBuf>,
    pub rep_period_ns: f64,
    pub hom_delay_ns: f64,
    pub analysis: HomAnalysisParams,
    pub output_dir: Option<PathBuf>,
}

impl Default for HomConfig {
    fn default() -> Self {
        Self {
            hbt_file: None,
            hom_file: None,
            rep_period_ns: DEFAULT_REP_PERIOD_NS,
            hom_delay_ns: DEFAULT_HOM_DELAY_NS,
            analysis: HomAnalysisParams::default(),
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Source and setup; `kind` is ignored, both histograms are written.
    pub source: SyntheticHistogram,
    pub seed: u64,
    /// Write expected counts instead of Poisson samples.
    pub noiseless: bool,
    pub output_dir: Option<PathBuf>,
}

/// Parse `path`, or defaults when absent.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn output_dir(dir: &Option<PathBuf>) -> CliResult<PathBuf> {
    dir.clone().ok_or_else(|| {
        CliError::Config("no output directory: pass --out or set `output_dir`".into())
    })
}

/// Create `dir` and write the resolved configuration into it.
pub fn write_sidecar<T: Serialize>(dir: &Path, config: &T) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut text =
        serde_json::to_string_pretty(config).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    fs::write(dir.join(SIDECAR), text)?;
    Ok(())
}
