//! Seeded Monte-Carlo rounds comparing ESFL with the FL, SL and SFL baselines.
//!
//! Every round draws its selected users and their resources from its own
//! ChaCha stream derived from the scenario seed, so rounds can run in any
//! order or in parallel and still produce the same records. All algorithms in
//! a round see the same users.

mod report;
mod scenario;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comm::{KbConvention, LinkRates};
use crate::error::{EsflError, Result};
use crate::optimizer::{alternate, common_feasible_cut, feasible_cuts, Allocation, OptimizerConfig};
use crate::timing::{
    esfl_round_time, fl_round_time, sfl_round_time, sl_round_time, AlgorithmTiming, LatencyModel, UserProfile,
};
use crate::workload::ModelArchitecture;

pub use report::{
    entropy, render_convergence_table, render_distribution_table, render_summary_table, AlgorithmSummary,
    ConvergenceRow, CutLayerDistribution, OptimizerSummary, SimulationReport,
};
pub use scenario::{preset, preset_scenarios, ScenarioSpec, PRESET_NAMES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Esfl,
    Fl,
    Sl,
    Sfl,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Esfl, Algorithm::Fl, Algorithm::Sl, Algorithm::Sfl];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Esfl => "ESFL",
            Algorithm::Fl => "FL",
            Algorithm::Sl => "SL",
            Algorithm::Sfl => "SFL",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Algorithm {
    type Err = EsflError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "esfl" => Ok(Algorithm::Esfl),
            "fl" => Ok(Algorithm::Fl),
            "sl" => Ok(Algorithm::Sl),
            "sfl" => Ok(Algorithm::Sfl),
            other => Err(EsflError::Config(format!(
                "unknown algorithm '{other}' (expected esfl, fl, sl or sfl)"
            ))),
        }
    }
}

/// What to do with a selected user that cannot host any cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfeasiblePolicy {
    #[default]
    Abort,
    /// Drop the user from the round and record it.
    Exclude,
}

/// Knobs that are not part of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSettings {
    pub kb: KbConvention,
    /// Mini-batch size for the memory estimate.
    pub batch: usize,
    /// Aggregation time added to every round, seconds.
    pub t_agg: f64,
    pub optimizer: OptimizerConfig,
    /// Shared cut of the SFL and SL baselines; the smallest cut every selected
    /// user can host when absent.
    pub fixed_cut: Option<usize>,
    pub on_infeasible: InfeasiblePolicy,
    /// Rounds used to project total training time for FL, SFL and ESFL.
    pub projected_rounds: u64,
    /// Rounds used to project total training time for SL.
    pub projected_rounds_sl: u64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        SimulationSettings {
            kb: KbConvention::Binary,
            batch: 32,
            t_agg: 0.0,
            optimizer: OptimizerConfig::default(),
            fixed_cut: None,
            on_infeasible: InfeasiblePolicy::Abort,
            projected_rounds: 1500,
            projected_rounds_sl: 200,
        }
    }
}

impl SimulationSettings {
    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if !(self.t_agg.is_finite() && self.t_agg >= 0.0) {
            return Err(EsflError::Config(format!(
                "aggregation time must be non-negative, got {}",
                self.t_agg
            )));
        }
        if self.fixed_cut == Some(0) {
            return Err(EsflError::Config("fixed cut layers are 1-based".into()));
        }
        Ok(())
    }

    pub fn projection_for(&self, algo: Algorithm) -> u64 {
        match algo {
            Algorithm::Sl => self.projected_rounds_sl,
            _ => self.projected_rounds,
        }
    }
}

/// Per-user quantities drawn once per run.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub samples: Vec<u64>,
    /// Resource option indices `(comm, comp)` when resources are sticky.
    pub resources: Option<Vec<(usize, usize)>>,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_resources(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> (usize, usize) {
    let comm = rng.random_range(0..spec.comm_options.len());
    let comp = rng.random_range(0..spec.comp_options.len());
    (comm, comp)
}

/// Draws the population-level quantities from stream 0 of the scenario seed.
pub fn sample_population(spec: &ScenarioSpec) -> Population {
    let mut rng = stream_rng(spec.seed, 0);
    let samples = (0..spec.population)
        .map(|_| spec.data_options[rng.random_range(0..spec.data_options.len())])
        .collect();
    let resources = spec
        .sticky_resources
        .then(|| (0..spec.population).map(|_| draw_resources(spec, &mut rng)).collect());
    Population { samples, resources }
}

fn make_user(spec: &ScenarioSpec, kb: KbConvention, id: usize, samples: u64, res: (usize, usize)) -> UserProfile {
    UserProfile {
        id,
        samples,
        compute: spec.comp_options[res.1] * 1e12,
        rates: LinkRates::symmetric(spec.comm_options[res.0] * kb.bytes_per_kb()),
        storage_bytes: spec.device_storage_bytes,
        memory_bytes: spec.device_memory_bytes,
        epochs: spec.epochs,
    }
}

/// Users of round `round` (0-based), sorted by id.
pub fn sample_round_users(
    spec: &ScenarioSpec,
    population: &Population,
    round: usize,
    kb: KbConvention,
) -> Vec<UserProfile> {
    let mut rng = stream_rng(spec.seed, round as u64 + 1);
    let mut ids = sample_indices(&mut rng, spec.population, spec.selected_per_round).into_vec();
    ids.sort_unstable();
    ids.into_iter()
        .map(|id| {
            let res = match &population.resources {
                Some(fixed) => fixed[id],
                None => draw_resources(spec, &mut rng),
            };
            make_user(spec, kb, id, population.samples[id], res)
        })
        .collect()
}

/// Everything measured in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub users: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<usize>,
    /// Round time per algorithm, seconds.
    pub times: BTreeMap<Algorithm, f64>,
    /// Communication share of the round time per algorithm, seconds.
    pub comm_times: BTreeMap<Algorithm, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<Allocation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer_converged: Option<bool>,
    /// Objective after each optimizer iteration.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub optimizer_trace: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_cut: Option<usize>,
}

/// Runs the requested algorithms on one set of users.
pub fn run_round(
    round: usize,
    users: Vec<UserProfile>,
    algorithms: &[Algorithm],
    model: &LatencyModel,
    server_compute: f64,
    settings: &SimulationSettings,
) -> Result<RoundRecord> {
    let mut kept = Vec::with_capacity(users.len());
    let mut excluded = Vec::new();
    for u in users {
        match feasible_cuts(&u, model) {
            Ok(_) => kept.push(u),
            Err(e @ EsflError::InfeasibleUser { .. }) => match settings.on_infeasible {
                InfeasiblePolicy::Abort => return Err(e),
                InfeasiblePolicy::Exclude => excluded.push(u.id),
            },
            Err(e) => return Err(e),
        }
    }
    if kept.is_empty() {
        return Err(EsflError::Validation(format!(
            "round {round}: every selected user was excluded as infeasible"
        )));
    }
    let users = kept;

    let mut record = RoundRecord {
        round,
        users: users.iter().map(|u| u.id).collect(),
        excluded,
        times: BTreeMap::new(),
        comm_times: BTreeMap::new(),
        allocation: None,
        optimizer_iterations: None,
        optimizer_converged: None,
        optimizer_trace: Vec::new(),
        fixed_cut: None,
    };
    let needs_fixed = algorithms.iter().any(|a| matches!(a, Algorithm::Sfl | Algorithm::Sl));
    let fixed_cut = if needs_fixed {
        let cut = match settings.fixed_cut {
            Some(cut) => {
                model.cut(cut)?;
                for u in &users {
                    if !feasible_cuts(u, model)?.contains(&cut) {
                        return Err(EsflError::InfeasibleUser {
                            user: u.id,
                            reason: format!("cannot host the fixed cut {cut}"),
                        });
                    }
                }
                cut
            }
            None => common_feasible_cut(&users, model)?,
        };
        record.fixed_cut = Some(cut);
        cut
    } else {
        0
    };

    for &algo in algorithms {
        let timing: AlgorithmTiming = match algo {
            Algorithm::Esfl => {
                let out = alternate(&users, model, server_compute, &settings.optimizer)?;
                let t = esfl_round_time(&users, &out.allocation.cuts, &out.allocation.server_compute, model)?;
                record.optimizer_iterations = Some(out.iterations);
                record.optimizer_converged = Some(out.converged);
                record.optimizer_trace = out.trace.iter().map(|e| e.objective).collect();
                record.allocation = Some(out.allocation);
                t
            }
            Algorithm::Fl => fl_round_time(&users, model)?,
            Algorithm::Sfl => sfl_round_time(&users, model, fixed_cut, server_compute)?,
            Algorithm::Sl => sl_round_time(&users, model, fixed_cut, server_compute)?,
        };
        record.times.insert(algo, timing.round_time);
        record.comm_times.insert(algo, timing.comm_time);
    }
    Ok(record)
}

fn dedup_algorithms(algorithms: &[Algorithm]) -> Result<Vec<Algorithm>> {
    if algorithms.is_empty() {
        return Err(EsflError::Config("no algorithms requested".into()));
    }
    let mut out: Vec<Algorithm> = algorithms.to_vec();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Runs `spec.rounds` rounds and aggregates them.
pub fn run_simulation(
    spec: &ScenarioSpec,
    algorithms: &[Algorithm],
    arch: &ModelArchitecture,
    settings: &SimulationSettings,
) -> Result<SimulationReport> {
    spec.validate()?;
    settings.validate()?;
    let algorithms = dedup_algorithms(algorithms)?;
    let model = LatencyModel::new(arch, settings.batch, settings.t_agg);
    let population = sample_population(spec);
    let server = spec.server_compute();

    let rounds = (0..spec.rounds)
        .into_par_iter()
        .map(|r| {
            let users = sample_round_users(spec, &population, r, settings.kb);
            run_round(r, users, &algorithms, &model, server, settings)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SimulationReport::build(
        spec.clone(),
        arch.name.clone(),
        algorithms,
        settings.clone(),
        model.num_layers(),
        rounds,
    ))
}

/// Default population scales of the convergence study.
pub const CONVERGENCE_SCALES: [usize; 4] = [100, 200, 400, 800];

/// Runs the optimizer once per (scenario, scale) on a freshly drawn population
/// in which every user participates.
pub fn convergence_study(
    specs: &[ScenarioSpec],
    scales: &[usize],
    arch: &ModelArchitecture,
    settings: &SimulationSettings,
) -> Result<Vec<ConvergenceRow>> {
    settings.validate()?;
    let model = LatencyModel::new(arch, settings.batch, settings.t_agg);
    let jobs: Vec<(&ScenarioSpec, usize)> = specs.iter().flat_map(|s| scales.iter().map(move |&n| (s, n))).collect();
    for (spec, scale) in &jobs {
        spec.validate()?;
        if *scale == 0 {
            return Err(EsflError::Config("population scales must be positive".into()));
        }
    }
    jobs.into_par_iter()
        .map(|(spec, scale)| {
            let mut rng = stream_rng(spec.seed, (1u64 << 32) + scale as u64);
            let users: Vec<UserProfile> = (0..scale)
                .map(|id| {
                    let samples = spec.data_options[rng.random_range(0..spec.data_options.len())];
                    let res = draw_resources(spec, &mut rng);
                    make_user(spec, settings.kb, id, samples, res)
                })
                .collect();
            let out = alternate(&users, &model, spec.server_compute(), &settings.optimizer)?;
            let monotone = out.trace.windows(2).all(|w| w[1].objective <= w[0].objective);
            Ok(ConvergenceRow {
                scenario: spec.name.clone(),
                scale,
                iterations: out.iterations,
                converged: out.converged,
                objective: out.allocation.objective,
                monotone,
                trace: out.trace.iter().map(|e| e.objective).collect(),
            })
        })
        .collect()
}
