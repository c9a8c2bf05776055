use std::fmt;
use std::path::PathBuf;

use edgelink::lattice::SystemSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Spectrum,
    Bands,
    Calibrate,
    Dynamics,
    BoundaryRoots,
    OmegaSweep,
    FidelitySweep,
    DistanceScan,
    Asym,
    Bonds,
}

impl Task {
    pub fn parse(name: &str) -> Option<Task> {
        serde_json::from_value(Value::String(name.to_string())).ok()
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

/// Axes of a generic sweep; each listed axis overrides the system spec.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub l: Option<Vec<usize>>,
    #[serde(default)]
    pub d: Option<Vec<usize>>,
    #[serde(default)]
    pub g: Option<Vec<f64>>,
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
}

impl Grid {
    pub fn is_empty(&self) -> bool {
        self.l.is_none() && self.d.is_none() && self.g.is_none() && self.eps.is_none()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub task: Task,
    #[serde(default)]
    pub task_params: Map<String, Value>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub grid: Grid,
    /// Energy resolution demanded of reported roots.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

/// Failure with its exit status: 2 for bad input, 3 for a failed solve.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn validation(kind: &str, message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            kind: kind.to_string(),
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({ "error": self.kind, "message": self.message, "exit_code": self.code })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<edgelink::Error> for CliError {
    fn from(e: edgelink::Error) -> Self {
        CliError {
            code: if e.is_validation() { 2 } else { 3 },
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

/// Typed task parameters; unknown keys are rejected.
pub fn params<T: DeserializeOwned>(task: Task, map: &Map<String, Value>) -> Result<T, CliError> {
    serde_json::from_value(Value::Object(map.clone()))
        .map_err(|e| CliError::validation("task_params", format!("{task:?}: {e}")))
}

fn default_kx_samples() -> usize {
    201
}
fn default_ky_samples() -> usize {
    101
}
fn default_calibrate_eps() -> f64 {
    -1.75
}
fn default_samples() -> usize {
    4096
}
fn default_window_76() -> f64 {
    -1.76
}
fn default_omega_g0() -> Vec<f64> {
    vec![0.05, 0.1, 0.3, 1.0, 3.0]
}
fn default_w_points_8() -> usize {
    8
}
fn default_fidelity_g0() -> Vec<f64> {
    vec![0.001, 0.01, 0.1, 0.3, 1.0, 3.0]
}
fn default_w_points_6() -> usize {
    6
}
fn default_distances() -> Vec<usize> {
    vec![2, 4, 6, 8, 12, 16, 24, 32, 48]
}
fn default_distance_g0() -> Vec<f64> {
    vec![0.1, 3.0]
}
fn default_distance_window() -> f64 {
    -1.765
}
fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoParams {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandsParams {
    #[serde(default = "default_kx_samples")]
    pub kx_samples: usize,
    #[serde(default = "default_ky_samples")]
    pub ky_samples: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateParams {
    #[serde(default = "default_calibrate_eps")]
    pub eps_tilde: f64,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Initial {
    #[default]
    Q1,
    Q2,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsParams {
    pub tmax: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub initial: Initial,
    /// Attach frequency/fidelity analysis (JSON output only).
    #[serde(default)]
    pub analyze: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaSweepParams {
    /// Energy whose edge window is swept.
    #[serde(default = "default_window_76")]
    pub window: f64,
    #[serde(default = "default_omega_g0")]
    pub g0: Vec<f64>,
    #[serde(default = "default_w_points_8")]
    pub w_points: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelitySweepParams {
    #[serde(default = "default_calibrate_eps")]
    pub window: f64,
    #[serde(default = "default_fidelity_g0")]
    pub g0: Vec<f64>,
    #[serde(default = "default_w_points_6")]
    pub w_points: usize,
    /// Lattice sizes; defaults to the system's.
    #[serde(default)]
    pub sizes: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceScanParams {
    #[serde(default = "default_distances")]
    pub d: Vec<usize>,
    #[serde(default = "default_distance_g0")]
    pub g0: Vec<f64>,
    #[serde(default = "default_w_points_6")]
    pub eps_points: usize,
    #[serde(default = "default_distance_window")]
    pub window: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymParams {
    /// Energy at which the f constants are read; defaults to the window midpoint.
    #[serde(default)]
    pub at: Option<f64>,
    #[serde(default = "yes")]
    pub refine: bool,
}
