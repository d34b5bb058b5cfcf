//! Strict TOML run configuration.
//!
//! Every section is optional and every field inside a section is optional;
//! missing values fall back to the built-in defaults and command-line flags
//! override whatever the file says. Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::comm::{link_rates, KbConvention, RateSource};
use crate::error::{EsflError, Result};
use crate::optimizer::{ObjectiveScope, OptimizerConfig};
use crate::simulator::{preset, Algorithm, InfeasiblePolicy, ScenarioSpec, SimulationSettings};
use crate::split::{Activation, Loss};
use crate::timing::UserProfile;
use crate::workload::{resolve_architecture, ModelArchitecture};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// Builtin profile name or path to a profile document.
    pub architecture: Option<String>,
    pub algorithms: Option<Vec<Algorithm>>,
    pub scenario: Option<ScenarioSection>,
    #[serde(default)]
    pub units: UnitsSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    /// Explicit users for `optimize`.
    pub users: Option<Vec<UserSection>>,
    /// Server budget for `optimize`, TFLOPs.
    pub server_compute_tflops: Option<f64>,
    #[serde(default)]
    pub converge: ConvergeSection,
    #[serde(default)]
    pub train: TrainSection,
}

/// A preset name plus overrides, or a complete inline scenario.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub preset: Option<String>,
    pub name: Option<String>,
    pub comm_options: Option<Vec<f64>>,
    pub comp_options: Option<Vec<f64>>,
    pub data_options: Option<Vec<u64>>,
    pub population: Option<usize>,
    pub selected_per_round: Option<usize>,
    pub rounds: Option<usize>,
    pub epochs: Option<u32>,
    pub server_compute_tflops: Option<f64>,
    pub sticky_resources: Option<bool>,
    pub device_storage_bytes: Option<f64>,
    pub device_memory_bytes: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsSection {
    /// Backward-pass FLOPs as a multiple of forward FLOPs.
    pub bwd_multiplier: Option<f64>,
    pub bytes_per_element: Option<f64>,
    /// Aggregation time per round, seconds.
    pub t_agg: Option<f64>,
    pub kb: Option<KbConvention>,
    pub batch: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub max_iters: Option<usize>,
    pub stall_tolerance: Option<f64>,
    pub bisection_tolerance: Option<f64>,
    pub bisection_max_steps: Option<usize>,
    pub scope: Option<ObjectiveScope>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub fixed_cut: Option<usize>,
    pub on_infeasible: Option<InfeasiblePolicy>,
    pub projected_rounds: Option<u64>,
    pub projected_rounds_sl: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSection {
    pub samples: u64,
    pub compute_tflops: f64,
    pub rates: RateSource,
    pub epochs: Option<u32>,
    pub storage_bytes: Option<f64>,
    pub memory_bytes: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSection {
    pub scenarios: Option<Vec<String>>,
    pub scales: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub widths: Option<Vec<usize>>,
    pub activations: Option<Vec<Activation>>,
    pub loss: Option<Loss>,
    pub samples_per_user: Option<Vec<usize>>,
    pub cuts: Option<Vec<usize>>,
    pub epochs: Option<u32>,
    pub rounds: Option<usize>,
    pub eta: Option<f64>,
    pub rho0: Option<f64>,
    pub decay_rounds: Option<f64>,
    pub batch_size: Option<usize>,
    pub spread: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            EsflError::Parse {
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| EsflError::io(path.display().to_string(), e))?;
        RunConfig::parse(&text)
    }
}

/// Architecture after unit overrides, with where it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedArchitecture {
    pub source: String,
    pub name: String,
    pub num_layers: usize,
    pub bytes_per_element: f64,
    pub bwd_multiplier: f64,
    #[serde(skip)]
    pub arch: ModelArchitecture,
}

pub fn resolve_arch(source: &str, units: &UnitsSection) -> Result<ResolvedArchitecture> {
    let mut arch = resolve_architecture(source)?;
    if let Some(k) = units.bwd_multiplier {
        arch.bwd_multiplier = k;
    }
    if let Some(b) = units.bytes_per_element {
        arch.bytes_per_element = b;
    }
    arch.validate()
        .map_err(|e| EsflError::Config(format!("architecture '{source}': {e}")))?;
    Ok(ResolvedArchitecture {
        source: source.to_string(),
        name: arch.name.clone(),
        num_layers: arch.num_layers(),
        bytes_per_element: arch.bytes_per_element,
        bwd_multiplier: arch.bwd_multiplier,
        arch,
    })
}

pub fn resolve_scenario(section: &ScenarioSection) -> Result<ScenarioSpec> {
    let mut spec = match &section.preset {
        Some(name) => preset(name).ok_or_else(|| EsflError::Config(format!("unknown scenario preset '{name}'")))?,
        None => {
            let missing = |what: &str| EsflError::Config(format!("inline scenario needs '{what}'"));
            ScenarioSpec {
                name: section.name.clone().unwrap_or_else(|| "custom".into()),
                comm_options: section.comm_options.clone().ok_or_else(|| missing("comm_options"))?,
                comp_options: section.comp_options.clone().ok_or_else(|| missing("comp_options"))?,
                data_options: section.data_options.clone().ok_or_else(|| missing("data_options"))?,
                ..preset("BP").expect("builtin preset")
            }
        }
    };
    if let Some(v) = &section.name {
        spec.name = v.clone();
    }
    if let Some(v) = &section.comm_options {
        spec.comm_options = v.clone();
    }
    if let Some(v) = &section.comp_options {
        spec.comp_options = v.clone();
    }
    if let Some(v) = &section.data_options {
        spec.data_options = v.clone();
    }
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = section.$f { spec.$f = v; } )* };
    }
    set!(
        population,
        selected_per_round,
        rounds,
        epochs,
        server_compute_tflops,
        sticky_resources
    );
    if section.device_storage_bytes.is_some() {
        spec.device_storage_bytes = section.device_storage_bytes;
    }
    if section.device_memory_bytes.is_some() {
        spec.device_memory_bytes = section.device_memory_bytes;
    }
    Ok(spec)
}

pub fn resolve_optimizer(section: &OptimizerSection) -> OptimizerConfig {
    let d = OptimizerConfig::default();
    OptimizerConfig {
        max_iters: section.max_iters.unwrap_or(d.max_iters),
        stall_tolerance: section.stall_tolerance.unwrap_or(d.stall_tolerance),
        bisection_tolerance: section.bisection_tolerance.unwrap_or(d.bisection_tolerance),
        bisection_max_steps: section.bisection_max_steps.unwrap_or(d.bisection_max_steps),
        scope: section.scope.unwrap_or(d.scope),
    }
}

pub fn resolve_settings(cfg: &RunConfig) -> Result<SimulationSettings> {
    let d = SimulationSettings::default();
    let s = SimulationSettings {
        kb: cfg.units.kb.unwrap_or(d.kb),
        batch: cfg.units.batch.unwrap_or(d.batch),
        t_agg: cfg.units.t_agg.unwrap_or(d.t_agg),
        optimizer: resolve_optimizer(&cfg.optimizer),
        fixed_cut: cfg.simulation.fixed_cut,
        on_infeasible: cfg.simulation.on_infeasible.unwrap_or(d.on_infeasible),
        projected_rounds: cfg.simulation.projected_rounds.unwrap_or(d.projected_rounds),
        projected_rounds_sl: cfg.simulation.projected_rounds_sl.unwrap_or(d.projected_rounds_sl),
    };
    s.validate()?;
    Ok(s)
}

pub fn resolve_users(sections: &[UserSection], kb: KbConvention, default_epochs: u32) -> Result<Vec<UserProfile>> {
    if sections.is_empty() {
        return Err(EsflError::Config("the user list is empty".into()));
    }
    sections
        .iter()
        .enumerate()
        .map(|(id, u)| {
            if !(u.compute_tflops.is_finite() && u.compute_tflops > 0.0) {
                return Err(EsflError::Config(format!(
                    "user {id}: compute must be positive, got {}",
                    u.compute_tflops
                )));
            }
            let rates = link_rates(&u.rates, kb).map_err(|e| match e {
                EsflError::Domain(m) => EsflError::Config(format!("user {id}: {m}")),
                other => other,
            })?;
            Ok(UserProfile {
                id,
                samples: u.samples,
                compute: u.compute_tflops * 1e12,
                rates,
                storage_bytes: u.storage_bytes,
                memory_bytes: u.memory_bytes,
                epochs: u.epochs.unwrap_or(default_epochs),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::parse("seed = 1\nbogus = 2\n").unwrap_err();
        assert!(matches!(err, EsflError::Parse { line: 2, .. }), "{err}");
        assert!(RunConfig::parse("[units]\nkappa = 2\n").is_err());
    }

    #[test]
    fn preset_with_overrides() {
        let cfg = RunConfig::parse("[scenario]\npreset = \"lh\"\nrounds = 3\nseed_typo = 1\n");
        assert!(cfg.is_err());
        let cfg = RunConfig::parse("[scenario]\npreset = \"lh\"\nrounds = 3\n").unwrap();
        let spec = resolve_scenario(cfg.scenario.as_ref().unwrap()).unwrap();
        assert_eq!(spec.rounds, 3);
        assert_eq!(spec.comm_options, vec![5.0, 10.0, 20.0, 35.0]);
    }

    #[test]
    fn inline_scenario_needs_options() {
        let section = ScenarioSection {
            comm_options: Some(vec![1.0]),
            ..Default::default()
        };
        assert!(matches!(resolve_scenario(&section), Err(EsflError::Config(_))));
    }

    #[test]
    fn users_from_toml() {
        let cfg = RunConfig::parse(
            "[[users]]\nsamples = 500\ncompute_tflops = 1.3\nrates = { mode = \"direct\", direct = { up_kbps = 10 } }\n",
        )
        .unwrap();
        let users = resolve_users(cfg.users.as_ref().unwrap(), KbConvention::Binary, 5).unwrap();
        assert_eq!(users[0].rates.up, 10240.0);
        assert_eq!(users[0].epochs, 5);
    }

    #[test]
    fn unit_overrides_apply() {
        let units = UnitsSection {
            bwd_multiplier: Some(0.0),
            bytes_per_element: Some(2.0),
            ..Default::default()
        };
        let r = resolve_arch("vgg19", &units).unwrap();
        assert_eq!((r.bwd_multiplier, r.bytes_per_element), (0.0, 2.0));
        assert!(resolve_arch("/nonexistent/profile.txt", &units).is_err());
    }
}
