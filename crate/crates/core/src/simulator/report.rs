//! Aggregated simulation results and their text renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Algorithm, RoundRecord, ScenarioSpec, SimulationSettings};

/// Relative slack allowed when checking that optimizer traces never go up.
const DESCENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub mean_round_time: f64,
    /// Sum of the simulated round times.
    pub total_time: f64,
    pub mean_comm_time: f64,
    pub projected_rounds: u64,
    /// `mean_round_time × projected_rounds`.
    pub projected_total_time: f64,
}

/// Empirical cut-layer frequencies of the ESFL allocations.
///
/// A user's row is normalized by the number of rounds the user took part in;
/// users that were never selected have no row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutLayerDistribution {
    pub num_layers: usize,
    /// User id to probabilities over cuts `1..=L`.
    pub per_user: BTreeMap<usize, Vec<f64>>,
    pub participation: BTreeMap<usize, usize>,
    /// Frequencies over all (round, user) selections.
    pub pooled: Vec<f64>,
    /// Mean of the per-user entropies, nats.
    pub mean_entropy: f64,
    /// Population variance of the per-user entropies.
    pub entropy_variance: f64,
}

impl CutLayerDistribution {
    pub fn from_rounds(rounds: &[RoundRecord], num_layers: usize) -> Option<Self> {
        let mut counts: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut pooled_counts = vec![0usize; num_layers];
        let mut selections = 0usize;
        for r in rounds {
            let alloc = r.allocation.as_ref()?;
            for (&id, &cut) in r.users.iter().zip(&alloc.cuts) {
                counts.entry(id).or_insert_with(|| vec![0; num_layers])[cut - 1] += 1;
                pooled_counts[cut - 1] += 1;
                selections += 1;
            }
        }
        if selections == 0 {
            return None;
        }
        let mut per_user = BTreeMap::new();
        let mut participation = BTreeMap::new();
        for (id, row) in counts {
            let n: usize = row.iter().sum();
            participation.insert(id, n);
            per_user.insert(id, row.iter().map(|&c| c as f64 / n as f64).collect::<Vec<_>>());
        }
        let pooled = pooled_counts.iter().map(|&c| c as f64 / selections as f64).collect();
        let entropies: Vec<f64> = per_user.values().map(|p| entropy(p)).collect();
        let m = entropies.len() as f64;
        let mean_entropy = entropies.iter().sum::<f64>() / m;
        let entropy_variance = entropies
            .iter()
            .map(|h| (h - mean_entropy) * (h - mean_entropy))
            .sum::<f64>()
            / m;
        Some(CutLayerDistribution {
            num_layers,
            per_user,
            participation,
            pooled,
            mean_entropy,
            entropy_variance,
        })
    }
}

/// Shannon entropy in nats; zero entries contribute nothing.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSummary {
    pub mean_iterations: f64,
    pub max_iterations: usize,
    pub non_converged_rounds: usize,
    /// Trace steps whose objective rose by more than a relative 1e-12.
    pub descent_violations: usize,
}

impl OptimizerSummary {
    fn from_rounds(rounds: &[RoundRecord]) -> Option<Self> {
        let iterations: Vec<usize> = rounds.iter().filter_map(|r| r.optimizer_iterations).collect();
        if iterations.is_empty() {
            return None;
        }
        let descent_violations = rounds
            .iter()
            .flat_map(|r| r.optimizer_trace.windows(2))
            .filter(|w| w[1] > w[0] * (1.0 + DESCENT_TOLERANCE))
            .count();
        Some(OptimizerSummary {
            mean_iterations: iterations.iter().sum::<usize>() as f64 / iterations.len() as f64,
            max_iterations: iterations.iter().copied().max().unwrap_or(0),
            non_converged_rounds: rounds.iter().filter(|r| r.optimizer_converged == Some(false)).count(),
            descent_violations,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenario: ScenarioSpec,
    pub architecture: String,
    pub algorithms: Vec<Algorithm>,
    pub settings: SimulationSettings,
    pub summary: BTreeMap<Algorithm, AlgorithmSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<CutLayerDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSummary>,
    pub rounds: Vec<RoundRecord>,
}

impl SimulationReport {
    pub(crate) fn build(
        scenario: ScenarioSpec,
        architecture: String,
        algorithms: Vec<Algorithm>,
        settings: SimulationSettings,
        num_layers: usize,
        rounds: Vec<RoundRecord>,
    ) -> Self {
        let n = rounds.len() as f64;
        let summary = algorithms
            .iter()
            .map(|&algo| {
                let total_time: f64 = rounds.iter().map(|r| r.times[&algo]).sum();
                let comm: f64 = rounds.iter().map(|r| r.comm_times[&algo]).sum();
                let mean_round_time = total_time / n;
                let projected_rounds = settings.projection_for(algo);
                (
                    algo,
                    AlgorithmSummary {
                        mean_round_time,
                        total_time,
                        mean_comm_time: comm / n,
                        projected_rounds,
                        projected_total_time: mean_round_time * projected_rounds as f64,
                    },
                )
            })
            .collect();
        let distribution = if algorithms.contains(&Algorithm::Esfl) {
            CutLayerDistribution::from_rounds(&rounds, num_layers)
        } else {
            None
        };
        let optimizer = OptimizerSummary::from_rounds(&rounds);
        SimulationReport {
            scenario,
            architecture,
            algorithms,
            settings,
            summary,
            distribution,
            optimizer,
            rounds,
        }
    }

    pub fn mean_round_time(&self, algo: Algorithm) -> Option<f64> {
        self.summary.get(&algo).map(|s| s.mean_round_time)
    }
}

/// Per-algorithm latency table.
pub fn render_summary_table(report: &SimulationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scenario {}  architecture {}  rounds {}  seed {}",
        report.scenario.name,
        report.architecture,
        report.rounds.len(),
        report.scenario.seed
    );
    let _ = writeln!(
        out,
        "{:<10}{:>20}{:>20}{:>12}{:>20}",
        "algorithm", "round time (s)", "comm time (s)", "rounds", "total time (s)"
    );
    for (algo, s) in &report.summary {
        let _ = writeln!(
            out,
            "{:<10}{:>20.3}{:>20.3}{:>12}{:>20.3}",
            algo.label(),
            s.mean_round_time,
            s.mean_comm_time,
            s.projected_rounds,
            s.projected_total_time
        );
    }
    if let Some(o) = &report.optimizer {
        let _ = writeln!(
            out,
            "optimizer: mean iterations {:.3}, max {}, not converged {}, descent violations {}",
            o.mean_iterations, o.max_iterations, o.non_converged_rounds, o.descent_violations
        );
    }
    out
}

/// Cut-layer probabilities, one row per user plus the pooled row.
pub fn render_distribution_table(dist: &CutLayerDistribution) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<8}{:>7}", "user", "rounds");
    for l in 1..=dist.num_layers {
        let _ = write!(out, "{:>7}", format!("l{l}"));
    }
    out.push('\n');
    let mut row = |label: String, n: String, p: &[f64]| {
        let _ = write!(out, "{label:<8}{n:>7}");
        for x in p {
            let _ = write!(out, "{x:>7.3}");
        }
        out.push('\n');
    };
    for (id, p) in &dist.per_user {
        row(id.to_string(), dist.participation[id].to_string(), p);
    }
    let total: usize = dist.participation.values().sum();
    row("pooled".into(), total.to_string(), &dist.pooled);
    let _ = writeln!(
        out,
        "entropy: mean {:.6} nats, variance across users {:.6}",
        dist.mean_entropy, dist.entropy_variance
    );
    out
}

/// One optimizer run of the convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub scenario: String,
    pub scale: usize,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    /// Whether the trace never went up.
    pub monotone: bool,
    pub trace: Vec<f64>,
}

pub fn render_convergence_table(rows: &[ConvergenceRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10}{:>8}{:>12}{:>11}{:>20}",
        "scenario", "users", "iterations", "converged", "objective (s)"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<10}{:>8}{:>12}{:>11}{:>20.3}",
            r.scenario, r.scale, r.iterations, r.converged, r.objective
        );
    }
    out
}
