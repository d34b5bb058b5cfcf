//! Scenario descriptions and the eight built-in resource settings.

use serde::{Deserialize, Serialize};

use crate::error::{EsflError, Result};

/// One experimental setting: resource option lists and run sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    /// Symmetric link rate options in KB/s.
    pub comm_options: Vec<f64>,
    /// Device compute options in TFLOPs.
    pub comp_options: Vec<f64>,
    /// Per-user sample count options.
    pub data_options: Vec<u64>,
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_selected")]
    pub selected_per_round: usize,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_epochs")]
    pub epochs: u32,
    /// Server budget `C_total` in TFLOPs.
    #[serde(default = "default_server")]
    pub server_compute_tflops: f64,
    #[serde(default)]
    pub seed: u64,
    /// Draw each user's resources once for the whole run instead of every round.
    #[serde(default)]
    pub sticky_resources: bool,
    /// Storage of every device in bytes; unlimited when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_storage_bytes: Option<f64>,
    /// Memory of every device in bytes; unlimited when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_memory_bytes: Option<f64>,
}

fn default_population() -> usize {
    100
}
fn default_selected() -> usize {
    10
}
fn default_rounds() -> usize {
    100
}
fn default_epochs() -> u32 {
    5
}
fn default_server() -> f64 {
    130.0
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EsflError::Config(format!("scenario '{}': {msg}", self.name)));
        if self.comm_options.is_empty() || self.comp_options.is_empty() || self.data_options.is_empty() {
            return bad("option lists must be nonempty".into());
        }
        if self.comm_options.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad(format!(
                "communication options must be positive: {:?}",
                self.comm_options
            ));
        }
        if self.comp_options.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad(format!("compute options must be positive: {:?}", self.comp_options));
        }
        if self.data_options.contains(&0) {
            return bad("data options must be positive".into());
        }
        if self.population == 0 || self.selected_per_round == 0 {
            return bad("population and selection size must be positive".into());
        }
        if self.selected_per_round > self.population {
            return bad(format!(
                "cannot select {} of {} users",
                self.selected_per_round, self.population
            ));
        }
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if !(self.server_compute_tflops.is_finite() && self.server_compute_tflops > 0.0) {
            return bad(format!(
                "server compute must be positive, got {}",
                self.server_compute_tflops
            ));
        }
        for (what, v) in [
            ("storage", self.device_storage_bytes),
            ("memory", self.device_memory_bytes),
        ] {
            if let Some(v) = v {
                if v.is_nan() || v < 0.0 {
                    return bad(format!("device {what} must be non-negative, got {v}"));
                }
            }
        }
        Ok(())
    }

    /// Server budget in FLOPs/s.
    pub fn server_compute(&self) -> f64 {
        self.server_compute_tflops * 1e12
    }
}

const POOR_COMM: [f64; 4] = [10.0, 15.0, 20.0, 25.0];
const RICH_COMM: [f64; 4] = [50.0, 75.0, 100.0, 125.0];
const POOR_COMP: [f64; 4] = [1.3, 1.95, 2.6, 3.25];
const RICH_COMP: [f64; 4] = [6.5, 9.75, 13.0, 16.25];
const SPREAD_COMP: [f64; 4] = [0.65, 1.3, 2.6, 4.55];
const SPREAD_COMM: [f64; 4] = [5.0, 10.0, 20.0, 35.0];
const IID_DATA: [u64; 1] = [500];
const SKEWED_DATA: [u64; 4] = [200, 400, 600, 800];

/// Names of the built-in scenarios, in presentation order.
pub const PRESET_NAMES: [&str; 8] = ["BP", "PR", "RP", "BR", "SH", "SL", "LS", "LH"];

fn spec(name: &str, comm: &[f64], comp: &[f64], data: &[u64]) -> ScenarioSpec {
    ScenarioSpec {
        name: name.to_string(),
        comm_options: comm.to_vec(),
        comp_options: comp.to_vec(),
        data_options: data.to_vec(),
        population: default_population(),
        selected_per_round: default_selected(),
        rounds: default_rounds(),
        epochs: default_epochs(),
        server_compute_tflops: default_server(),
        seed: 0,
        sticky_resources: false,
        device_storage_bytes: None,
        device_memory_bytes: None,
    }
}

/// The resource-level scenarios (poor/rich communication and computation,
/// identical data) followed by the heterogeneity scenarios (small/large
/// spread of resources, skewed data).
pub fn preset_scenarios() -> Vec<ScenarioSpec> {
    vec![
        spec("BP", &POOR_COMM, &POOR_COMP, &IID_DATA),
        spec("PR", &POOR_COMM, &RICH_COMP, &IID_DATA),
        spec("RP", &RICH_COMM, &POOR_COMP, &IID_DATA),
        spec("BR", &RICH_COMM, &RICH_COMP, &IID_DATA),
        spec("SH", &POOR_COMM, &POOR_COMP, &SKEWED_DATA),
        spec("SL", &POOR_COMM, &SPREAD_COMP, &SKEWED_DATA),
        spec("LS", &SPREAD_COMM, &POOR_COMP, &SKEWED_DATA),
        spec("LH", &SPREAD_COMM, &SPREAD_COMP, &SKEWED_DATA),
    ]
}

/// Looks up a preset by name, ignoring case.
pub fn preset(name: &str) -> Option<ScenarioSpec> {
    preset_scenarios()
        .into_iter()
        .find(|s| s.name.eq_ignore_ascii_case(name))
}
