use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{
    resolve_arch, resolve_scenario, resolve_settings, resolve_users, RunConfig, ScenarioSection, TrainSection,
};
use super::{CommonArgs, ConvergeArgs, ModelArgs, OptimizeArgs, SimulateArgs, TrainToyArgs};
use crate::comm::KbConvention;
use crate::error::{EsflError, Result};
use crate::optimizer::{alternate, brute_force_joint, Allocation, OptimizerOutcome};
use crate::simulator::{
    convergence_study, render_convergence_table, render_distribution_table, render_summary_table, run_simulation,
    Algorithm, ConvergenceRow, ScenarioSpec, SimulationReport, SimulationSettings, CONVERGENCE_SCALES,
};
use crate::split::{
    esfl_train, gaussian_blobs, linear_regression_data, monolithic_update, Activation, Dataset, DenseNet, Loss,
    LrSchedule, SplitState, ToyUser,
};
use crate::timing::{LatencyModel, UserProfile};

const DEFAULT_ARCH: &str = "vgg19";
const DEFAULT_SCENARIO: &str = "BP";
const DEFAULT_SERVER_TFLOPS: f64 = 130.0;
const DEFAULT_EPOCHS: u32 = 5;

/// Report files of one command, keyed by file name, plus what goes to stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub files: BTreeMap<String, String>,
    pub stdout: String,
}

impl CommandOutput {
    /// Writes every file through a temporary sibling and a rename, so a
    /// directory never holds half-written reports.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| EsflError::io(dir.display().to_string(), e))?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let tmp = dir.join(format!(".{name}.tmp"));
            std::fs::write(&tmp, contents).map_err(|e| EsflError::io(tmp.display().to_string(), e))?;
            staged.push((tmp, dir.join(name)));
        }
        for (tmp, dest) in staged {
            std::fs::rename(&tmp, &dest).map_err(|e| EsflError::io(dest.display().to_string(), e))?;
        }
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| EsflError::Numeric(format!("report serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    match &common.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}

fn apply_model_args(cfg: &mut RunConfig, m: &ModelArgs) -> Result<()> {
    if let Some(a) = &m.arch {
        cfg.architecture = Some(a.clone());
    }
    if let Some(k) = m.kappa {
        cfg.units.bwd_multiplier = Some(k);
    }
    if let Some(b) = m.bytes_per_element {
        cfg.units.bytes_per_element = Some(b);
    }
    if let Some(t) = m.t_agg {
        cfg.units.t_agg = Some(t);
    }
    if let Some(kb) = &m.kb {
        cfg.units.kb = Some(match kb.as_str() {
            "binary" => KbConvention::Binary,
            "decimal" => KbConvention::Decimal,
            other => return Err(EsflError::Config(format!("unknown KB convention '{other}'"))),
        });
    }
    if let Some(b) = m.batch {
        cfg.units.batch = Some(b);
    }
    if let Some(n) = m.max_iters {
        cfg.optimizer.max_iters = Some(n);
    }
    Ok(())
}

fn arch_source(cfg: &RunConfig) -> String {
    cfg.architecture.clone().unwrap_or_else(|| DEFAULT_ARCH.to_string())
}

#[derive(Serialize)]
struct SimulateConfig<'a> {
    command: &'static str,
    seed: u64,
    architecture: &'a super::config::ResolvedArchitecture,
    scenario: &'a ScenarioSpec,
    algorithms: &'a [Algorithm],
    settings: &'a SimulationSettings,
}

#[derive(Serialize)]
struct SimulateDocument<'a> {
    config: SimulateConfig<'a>,
    report: &'a SimulationReport,
}

fn rounds_table(report: &SimulationReport) -> String {
    let mut out = String::from("round");
    for a in &report.algorithms {
        let _ = write!(out, "\t{}_time\t{}_comm", a.label(), a.label());
    }
    out.push('\n');
    for r in &report.rounds {
        let _ = write!(out, "{}", r.round);
        for a in &report.algorithms {
            let _ = write!(out, "\t{}\t{}", r.times[a], r.comm_times[a]);
        }
        out.push('\n');
    }
    out
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<CommandOutput> {
    let mut cfg = load_config(&args.common)?;
    apply_model_args(&mut cfg, &args.model)?;
    let section = cfg.scenario.get_or_insert_with(Default::default);
    if let Some(name) = &args.scenario {
        section.preset = Some(name.clone());
    }
    if let Some(r) = args.rounds {
        section.rounds = Some(r);
    }
    if args.sticky {
        section.sticky_resources = Some(true);
    }
    if let Some(seed) = args.common.seed {
        cfg.seed = Some(seed);
    }
    if let Some(list) = &args.algos {
        cfg.algorithms = Some(list.iter().map(|s| s.parse()).collect::<Result<_>>()?);
    }
    if args.fixed_cut.is_some() {
        cfg.simulation.fixed_cut = args.fixed_cut;
    }
    simulate_with_config(&cfg)
}

/// Runs a simulation described entirely by `cfg`.
pub fn simulate_with_config(cfg: &RunConfig) -> Result<CommandOutput> {
    let arch = resolve_arch(&arch_source(cfg), &cfg.units)?;
    let mut section = cfg.scenario.clone().unwrap_or_default();
    if section.preset.is_none() && section.comm_options.is_none() {
        section.preset = Some(DEFAULT_SCENARIO.to_string());
    }
    let mut spec = resolve_scenario(&section)?;
    spec.seed = cfg.seed.unwrap_or(0);
    let algorithms = cfg.algorithms.clone().unwrap_or_else(|| Algorithm::ALL.to_vec());
    let settings = resolve_settings(cfg)?;
    spec.validate()?;

    let report = run_simulation(&spec, &algorithms, &arch.arch, &settings)?;
    let doc = SimulateDocument {
        config: SimulateConfig {
            command: "simulate",
            seed: spec.seed,
            architecture: &arch,
            scenario: &spec,
            algorithms: &report.algorithms,
            settings: &settings,
        },
        report: &report,
    };
    let summary = render_summary_table(&report);
    let mut files = BTreeMap::new();
    files.insert("simulate.json".to_string(), to_json(&doc)?);
    files.insert("summary.txt".to_string(), summary.clone());
    files.insert("rounds.tsv".to_string(), rounds_table(&report));
    if let Some(d) = &report.distribution {
        files.insert("distribution.txt".to_string(), render_distribution_table(d));
    }
    Ok(CommandOutput { files, stdout: summary })
}

#[derive(Serialize)]
struct OracleComparison {
    allocation: Allocation,
    /// Relative excess of the heuristic objective over the exhaustive optimum.
    gap: f64,
}

#[derive(Serialize)]
struct OptimizeDocument<'a> {
    config: OptimizeConfig<'a>,
    outcome: &'a OptimizerOutcome,
    per_user_time: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleComparison>,
}

#[derive(Serialize)]
struct OptimizeConfig<'a> {
    command: &'static str,
    architecture: &'a super::config::ResolvedArchitecture,
    users: &'a [UserProfile],
    server_compute_tflops: f64,
    settings: &'a SimulationSettings,
}

pub fn cmd_optimize(args: &OptimizeArgs) -> Result<CommandOutput> {
    let mut cfg = load_config(&args.common)?;
    apply_model_args(&mut cfg, &args.model)?;
    let arch = resolve_arch(&arch_source(&cfg), &cfg.units)?;
    let settings = resolve_settings(&cfg)?;
    let sections = cfg
        .users
        .as_ref()
        .ok_or_else(|| EsflError::Config("optimize needs a [[users]] list in the config".into()))?;
    let users = resolve_users(sections, settings.kb, DEFAULT_EPOCHS)?;
    let server_tflops = args
        .server_tflops
        .or(cfg.server_compute_tflops)
        .unwrap_or(DEFAULT_SERVER_TFLOPS);
    if !(server_tflops.is_finite() && server_tflops > 0.0) {
        return Err(EsflError::Config(format!(
            "server compute must be positive, got {server_tflops}"
        )));
    }
    let c_total = server_tflops * 1e12;
    let model = LatencyModel::new(&arch.arch, settings.batch, settings.t_agg);
    let outcome = alternate(&users, &model, c_total, &settings.optimizer)?;
    let alloc = &outcome.allocation;
    let per_user_time = users
        .iter()
        .zip(alloc.cuts.iter().zip(&alloc.server_compute))
        .map(|(u, (&l, &c))| model.round_total(u, l, c))
        .collect::<Result<Vec<_>>>()?;
    let oracle = if args.oracle {
        let best = brute_force_joint(&users, &model, c_total, &settings.optimizer)?;
        Some(OracleComparison {
            gap: alloc.objective / best.objective - 1.0,
            allocation: best,
        })
    } else {
        None
    };

    let mut text = String::new();
    for ((u, (&l, &c)), t) in users
        .iter()
        .zip(alloc.cuts.iter().zip(&alloc.server_compute))
        .zip(&per_user_time)
    {
        let _ = writeln!(
            text,
            "user {}: cut {l}, server {:.6} TFLOPs, round time {t:.6} s",
            u.id,
            c / 1e12
        );
    }
    let _ = writeln!(
        text,
        "objective {:.6} s after {} iterations (converged: {})",
        alloc.objective, outcome.iterations, outcome.converged
    );
    for e in &outcome.trace {
        let _ = writeln!(text, "  iteration {}: {:.6} s", e.iteration, e.objective);
    }
    if let Some(o) = &oracle {
        let _ = writeln!(
            text,
            "exhaustive optimum {:.6} s with cuts {:?}, gap {:.6}",
            o.allocation.objective, o.allocation.cuts, o.gap
        );
    }

    let doc = OptimizeDocument {
        config: OptimizeConfig {
            command: "optimize",
            architecture: &arch,
            users: &users,
            server_compute_tflops: server_tflops,
            settings: &settings,
        },
        outcome: &outcome,
        per_user_time,
        oracle,
    };
    let mut files = BTreeMap::new();
    files.insert("optimize.json".to_string(), to_json(&doc)?);
    files.insert("optimize.txt".to_string(), text.clone());
    Ok(CommandOutput { files, stdout: text })
}

#[derive(Serialize)]
struct ConvergeDocument<'a> {
    config: ConvergeConfig<'a>,
    rows: &'a [ConvergenceRow],
}

#[derive(Serialize)]
struct ConvergeConfig<'a> {
    command: &'static str,
    seed: u64,
    architecture: &'a super::config::ResolvedArchitecture,
    scenarios: &'a [ScenarioSpec],
    scales: &'a [usize],
    settings: &'a SimulationSettings,
}

pub fn cmd_converge(args: &ConvergeArgs) -> Result<CommandOutput> {
    let mut cfg = load_config(&args.common)?;
    apply_model_args(&mut cfg, &args.model)?;
    let arch = resolve_arch(&arch_source(&cfg), &cfg.units)?;
    let settings = resolve_settings(&cfg)?;
    let seed = args.common.seed.or(cfg.seed).unwrap_or(0);
    let names = args
        .scenarios
        .clone()
        .or_else(|| cfg.converge.scenarios.clone())
        .unwrap_or_else(|| ["BP", "PR", "RP", "BR"].iter().map(|s| s.to_string()).collect());
    let overrides = cfg.scenario.clone().unwrap_or_default();
    let specs = names
        .iter()
        .map(|name| {
            let section = ScenarioSection {
                preset: Some(name.clone()),
                ..overrides.clone()
            };
            let mut spec = resolve_scenario(&section)?;
            spec.seed = seed;
            Ok(spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let scales = args
        .scales
        .clone()
        .or_else(|| cfg.converge.scales.clone())
        .unwrap_or_else(|| CONVERGENCE_SCALES.to_vec());

    let rows = convergence_study(&specs, &scales, &arch.arch, &settings)?;
    let table = render_convergence_table(&rows);
    let doc = ConvergeDocument {
        config: ConvergeConfig {
            command: "converge",
            seed,
            architecture: &arch,
            scenarios: &specs,
            scales: &scales,
            settings: &settings,
        },
        rows: &rows,
    };
    let mut files = BTreeMap::new();
    files.insert("converge.json".to_string(), to_json(&doc)?);
    files.insert("converge.txt".to_string(), table.clone());
    Ok(CommandOutput { files, stdout: table })
}

/// Fully resolved toy-training setup.
#[derive(Debug, Clone, PartialEq, Serialize)]
struct TrainSetup {
    widths: Vec<usize>,
    activations: Vec<Activation>,
    loss: Loss,
    samples_per_user: Vec<usize>,
    cuts: Vec<usize>,
    epochs: u32,
    rounds: usize,
    eta: f64,
    schedule: LrSchedule,
    batch_size: usize,
    spread: f64,
}

impl TrainSetup {
    fn resolve(t: &TrainSection, args: &TrainToyArgs) -> Result<Self> {
        let setup = TrainSetup {
            widths: t.widths.clone().unwrap_or_else(|| vec![2, 8, 6, 3]),
            activations: t
                .activations
                .clone()
                .unwrap_or_else(|| vec![Activation::Tanh, Activation::Tanh, Activation::Linear]),
            loss: t.loss.unwrap_or(Loss::SoftmaxCrossEntropy),
            samples_per_user: t.samples_per_user.clone().unwrap_or_else(|| vec![60, 40]),
            cuts: args
                .cuts
                .clone()
                .or_else(|| t.cuts.clone())
                .unwrap_or_else(|| vec![1, 2]),
            epochs: t.epochs.unwrap_or(1),
            rounds: args.rounds.or(t.rounds).unwrap_or(50),
            eta: args.eta.or(t.eta).unwrap_or(1.0),
            schedule: LrSchedule {
                rho0: args.rho.or(t.rho0).unwrap_or(0.1),
                decay_rounds: t.decay_rounds.unwrap_or(100.0),
            },
            batch_size: t.batch_size.unwrap_or(10),
            spread: t.spread.unwrap_or(0.7),
        };
        let bad = |m: String| Err(EsflError::Config(m));
        if setup.widths.len() < 2 || setup.activations.len() + 1 != setup.widths.len() {
            return bad(format!(
                "{} layer widths need {} activations",
                setup.widths.len(),
                setup.widths.len().saturating_sub(1)
            ));
        }
        if setup.widths.contains(&0) {
            return bad("layer widths must be positive".into());
        }
        if setup.cuts.len() != setup.samples_per_user.len() {
            return bad(format!(
                "{} cuts for {} users",
                setup.cuts.len(),
                setup.samples_per_user.len()
            ));
        }
        let layers = setup.widths.len() - 1;
        if let Some(c) = setup.cuts.iter().find(|&&c| c == 0 || c > layers) {
            return bad(format!("cut {c} outside 1..={layers}"));
        }
        if setup.samples_per_user.contains(&0) {
            return bad("every user needs samples".into());
        }
        if !(setup.schedule.rho0.is_finite() && setup.schedule.rho0 >= 0.0)
            || setup.schedule.decay_rounds.is_nan()
            || setup.schedule.decay_rounds <= 0.0
            || !setup.eta.is_finite()
            || !(setup.spread.is_finite() && setup.spread >= 0.0)
        {
            return bad("learning rate, decay, aggregation step and spread must be finite and non-negative".into());
        }
        Ok(setup)
    }
}

#[derive(Serialize)]
struct EquivalenceCheck {
    /// Largest relative parameter deviation per cut.
    per_cut: Vec<f64>,
    max: f64,
}

#[derive(Serialize)]
struct TrainDocument<'a> {
    config: TrainConfig<'a>,
    losses: &'a [f64],
    max_deviation_from_init: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    equivalence: Option<EquivalenceCheck>,
}

#[derive(Serialize)]
struct TrainConfig<'a> {
    command: &'static str,
    seed: u64,
    setup: &'a TrainSetup,
}

fn relative_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs();
            if *y == 0.0 {
                d
            } else {
                d / y.abs()
            }
        })
        .fold(0.0, f64::max)
}

pub fn cmd_train_toy(args: &TrainToyArgs) -> Result<CommandOutput> {
    let cfg = load_config(&args.common)?;
    let setup = TrainSetup::resolve(&cfg.train, args)?;
    let seed = args.common.seed.or(cfg.seed).unwrap_or(0);

    let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
    init_rng.set_stream(0);
    let net = DenseNet::random(&setup.widths, &setup.activations, setup.loss, &mut init_rng)?;
    let mut data_rng = ChaCha8Rng::seed_from_u64(seed);
    data_rng.set_stream(1);
    let total: usize = setup.samples_per_user.iter().sum();
    let features = setup.widths[0];
    let outputs = *setup.widths.last().expect("validated widths");
    let data = match setup.loss {
        Loss::SoftmaxCrossEntropy => gaussian_blobs(total, features, outputs, setup.spread, &mut data_rng),
        Loss::SquaredError => linear_regression_data(total, features, outputs, setup.spread, &mut data_rng),
    };
    let users: Vec<ToyUser> = data
        .shards(&setup.samples_per_user)
        .into_iter()
        .zip(&setup.cuts)
        .map(|(d, &cut)| ToyUser {
            data: d,
            cut,
            epochs: setup.epochs,
        })
        .collect();

    let outcome = esfl_train(&net, &users, setup.rounds, setup.eta, setup.schedule, setup.batch_size)?;
    let max_deviation_from_init = outcome
        .net
        .flat_params()
        .iter()
        .zip(net.flat_params())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let equivalence = if args.check_equivalence {
        let batch: Dataset = users[0].data.slice(0, setup.batch_size.clamp(1, users[0].data.len()));
        let rate = setup.schedule.rate(0);
        let (mono, _) = monolithic_update(&net, &batch.x, &batch.y, rate)?;
        let want = mono.flat_params();
        let per_cut = (1..=net.num_layers())
            .map(|cut| {
                let mut s = SplitState::split(&net, cut, rate)?;
                s.split_update(&batch.x, &batch.y)?;
                Ok(relative_deviation(&s.concatenate().flat_params(), &want))
            })
            .collect::<Result<Vec<_>>>()?;
        let max = per_cut.iter().copied().fold(0.0, f64::max);
        Some(EquivalenceCheck { per_cut, max })
    } else {
        None
    };

    let mut text = String::new();
    let _ = writeln!(text, "{:<8}{:>20}", "round", "loss");
    for (r, l) in outcome.losses.iter().enumerate() {
        let _ = writeln!(text, "{r:<8}{l:>20.12}");
    }
    let _ = writeln!(text, "max deviation from initialization: {max_deviation_from_init:e}");
    if let Some(eq) = &equivalence {
        let _ = writeln!(text, "split vs monolithic max relative deviation: {:e}", eq.max);
    }

    let doc = TrainDocument {
        config: TrainConfig {
            command: "train-toy",
            seed,
            setup: &setup,
        },
        losses: &outcome.losses,
        max_deviation_from_init,
        equivalence,
    };
    let mut files = BTreeMap::new();
    files.insert("train.json".to_string(), to_json(&doc)?);
    files.insert("train.txt".to_string(), text.clone());
    Ok(CommandOutput { files, stdout: text })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_deviation_handles_zeros() {
        assert_eq!(relative_deviation(&[1.0, 0.5], &[1.0, 0.0]), 0.5);
        assert_eq!(relative_deviation(&[2.0], &[1.0]), 1.0);
    }
}
