//! Epoch and round latencies for ESFL and the FL / SL / SFL baselines.
//!
//! One epoch is strictly sequential: user compute, activation upload, server
//! compute, activation-gradient download. A round adds the user-side model
//! download and upload and a constant aggregation time, with every epoch of a
//! round taking the same time.

use serde::{Deserialize, Serialize};

use crate::comm::LinkRates;
use crate::error::{EsflError, Result};
use crate::workload::{CutWorkload, ModelArchitecture};

/// One device's resources and data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub id: usize,
    /// Training samples held by the user (`n_i`).
    pub samples: u64,
    /// Available user-side compute in FLOPs/s (`c_i`).
    pub compute: f64,
    pub rates: LinkRates,
    /// Storage available for the user-side model, bytes. `None` is unlimited.
    #[serde(default)]
    pub storage_bytes: Option<f64>,
    /// Memory available for training, bytes. `None` is unlimited.
    #[serde(default)]
    pub memory_bytes: Option<f64>,
    /// Local epochs per round (`ε_i`).
    pub epochs: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochBreakdown {
    /// User-side compute.
    pub t_c: f64,
    /// Activation upload.
    pub t_b: f64,
    /// Server-side compute.
    pub t_server: f64,
    /// Activation-gradient download.
    pub t_grad: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundBreakdown {
    /// User-side model upload at the end of the round.
    pub t_up: f64,
    /// User-side model distribution at the start of the round.
    pub t_down: f64,
    pub epochs: Vec<EpochBreakdown>,
    pub t_agg: f64,
    pub total: f64,
}

impl RoundBreakdown {
    /// Time spent on the air: model transfers plus activation traffic.
    pub fn comm_time(&self) -> f64 {
        self.epochs
            .iter()
            .fold(self.t_up + self.t_down, |acc, e| acc + (e.t_b + e.t_grad))
    }
}

fn transfer_time(bytes: f64, rate: f64, what: &str) -> Result<f64> {
    if bytes <= 0.0 {
        return Ok(0.0);
    }
    if rate.is_nan() || rate <= 0.0 {
        return Err(EsflError::InfeasibleLink(format!(
            "{bytes} bytes of {what} over a link with rate {rate}"
        )));
    }
    Ok(bytes / rate)
}

/// Latency of one split-training epoch.
///
/// `total_compute` is the whole network's training FLOPs per sample and
/// `server_compute` the FLOPs/s the server dedicates to this user. When the cut
/// leaves no server-side work, `server_compute` is ignored.
pub fn epoch_time(
    samples: u64,
    user_compute_rate: f64,
    rates: LinkRates,
    cw: &CutWorkload,
    total_compute: f64,
    server_compute: f64,
) -> Result<EpochBreakdown> {
    let n = samples as f64;
    let t_c = if cw.user_compute * n > 0.0 {
        if user_compute_rate.is_nan() || user_compute_rate <= 0.0 {
            return Err(EsflError::Domain(format!(
                "user compute must be positive, got {user_compute_rate}"
            )));
        }
        cw.user_compute * n / user_compute_rate
    } else {
        0.0
    };
    let traffic = cw.act_bytes * n;
    let t_b = transfer_time(traffic, rates.up, "activations")?;
    let server_work = (total_compute - cw.user_compute) * n;
    let t_server = if server_work > 0.0 {
        if server_compute.is_nan() || server_compute <= 0.0 {
            return Err(EsflError::Allocation(format!(
                "cut {} leaves server-side work but the user has {server_compute} server FLOPs/s",
                cw.cut
            )));
        }
        server_work / server_compute
    } else {
        0.0
    };
    let t_grad = transfer_time(traffic, rates.down, "activation gradients")?;
    Ok(EpochBreakdown {
        t_c,
        t_b,
        t_server,
        t_grad,
        total: t_c + t_b + t_server + t_grad,
    })
}

/// Round total from its parts, accumulated in a fixed order.
fn compose_total(t_up: f64, t_down: f64, epoch_total: f64, epochs: u32, t_agg: f64) -> f64 {
    let mut total = t_up + t_down;
    for _ in 0..epochs {
        total += epoch_total;
    }
    total + t_agg
}

/// Latency of one round for a user cut at `cw`.
pub fn round_time_at(
    user: &UserProfile,
    cw: &CutWorkload,
    total_compute: f64,
    server_compute: f64,
    t_agg: f64,
) -> Result<RoundBreakdown> {
    let epoch = epoch_time(
        user.samples,
        user.compute,
        user.rates,
        cw,
        total_compute,
        server_compute,
    )?;
    let t_up = transfer_time(cw.model_bytes, user.rates.up, "model upload")?;
    let t_down = transfer_time(cw.model_bytes, user.rates.down, "model download")?;
    Ok(RoundBreakdown {
        t_up,
        t_down,
        epochs: vec![epoch; user.epochs as usize],
        t_agg,
        total: compose_total(t_up, t_down, epoch.total, user.epochs, t_agg),
    })
}

/// Same as [`round_time_at`] but resolves the cut from an architecture.
pub fn round_time(
    user: &UserProfile,
    arch: &ModelArchitecture,
    cut: usize,
    server_compute: f64,
    t_agg: f64,
) -> Result<RoundBreakdown> {
    let cw = arch.cut_workload(cut, 0)?;
    round_time_at(user, &cw, arch.total_compute(), server_compute, t_agg)
}

/// Precomputed per-cut workloads plus the constants every round shares.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyModel {
    pub table: Vec<CutWorkload>,
    pub total_compute: f64,
    pub t_agg: f64,
}

impl LatencyModel {
    /// `batch` only affects the memory estimate used for feasibility checks.
    pub fn new(arch: &ModelArchitecture, batch: usize, t_agg: f64) -> Self {
        LatencyModel {
            table: arch.cut_table(batch),
            total_compute: arch.total_compute(),
            t_agg,
        }
    }

    pub fn num_layers(&self) -> usize {
        self.table.len()
    }

    pub fn cut(&self, cut: usize) -> Result<&CutWorkload> {
        if cut == 0 || cut > self.table.len() {
            return Err(EsflError::Domain(format!(
                "cut layer {cut} outside 1..={}",
                self.table.len()
            )));
        }
        Ok(&self.table[cut - 1])
    }

    pub fn round_time(&self, user: &UserProfile, cut: usize, server_compute: f64) -> Result<RoundBreakdown> {
        round_time_at(user, self.cut(cut)?, self.total_compute, server_compute, self.t_agg)
    }

    /// `round_time(..).total` without materializing the epoch list; the
    /// arithmetic is identical.
    pub fn round_total(&self, user: &UserProfile, cut: usize, server_compute: f64) -> Result<f64> {
        let cw = self.cut(cut)?;
        let epoch = epoch_time(
            user.samples,
            user.compute,
            user.rates,
            cw,
            self.total_compute,
            server_compute,
        )?;
        let t_up = transfer_time(cw.model_bytes, user.rates.up, "model upload")?;
        let t_down = transfer_time(cw.model_bytes, user.rates.down, "model download")?;
        Ok(compose_total(t_up, t_down, epoch.total, user.epochs, self.t_agg))
    }
}

/// Round latency of one algorithm and the communication share of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmTiming {
    pub round_time: f64,
    pub comm_time: f64,
}

/// Index of the slowest user; ties go to the lowest index.
pub fn straggler(rounds: &[RoundBreakdown]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in rounds.iter().enumerate() {
        match best {
            Some(b) if rounds[b].total >= r.total => {}
            _ => best = Some(i),
        }
    }
    best
}

fn synchronous(rounds: &[RoundBreakdown]) -> Result<AlgorithmTiming> {
    let i = straggler(rounds).ok_or_else(|| EsflError::Validation("no users in round".into()))?;
    Ok(AlgorithmTiming {
        round_time: rounds[i].total,
        comm_time: rounds[i].comm_time(),
    })
}

/// Synchronous round time of an ESFL allocation: the slowest user's total.
pub fn esfl_round_time(
    users: &[UserProfile],
    cuts: &[usize],
    server_compute: &[f64],
    model: &LatencyModel,
) -> Result<AlgorithmTiming> {
    if cuts.len() != users.len() || server_compute.len() != users.len() {
        return Err(EsflError::Validation(format!(
            "allocation covers {} cuts / {} compute shares for {} users",
            cuts.len(),
            server_compute.len(),
            users.len()
        )));
    }
    let rounds = users
        .iter()
        .zip(cuts.iter().zip(server_compute))
        .map(|(u, (&l, &c))| model.round_time(u, l, c))
        .collect::<Result<Vec<_>>>()?;
    synchronous(&rounds)
}

/// Federated averaging: every user trains the whole network locally.
pub fn fl_round_time(users: &[UserProfile], model: &LatencyModel) -> Result<AlgorithmTiming> {
    let full = model.num_layers();
    let rounds = users
        .iter()
        .map(|u| model.round_time(u, full, 0.0))
        .collect::<Result<Vec<_>>>()?;
    let i = straggler(&rounds).ok_or_else(|| EsflError::Validation("no users in round".into()))?;
    Ok(AlgorithmTiming {
        round_time: rounds[i].total,
        comm_time: rounds[i].t_up + rounds[i].t_down,
    })
}

/// SplitFed: one cut for everybody and an equal split of the server budget.
pub fn sfl_round_time(
    users: &[UserProfile],
    model: &LatencyModel,
    fixed_cut: usize,
    server_total: f64,
) -> Result<AlgorithmTiming> {
    if users.is_empty() {
        return Err(EsflError::Validation("no users in round".into()));
    }
    let share = server_total / users.len() as f64;
    let rounds = users
        .iter()
        .map(|u| model.round_time(u, fixed_cut, share))
        .collect::<Result<Vec<_>>>()?;
    synchronous(&rounds)
}

/// Split learning: users are served one after another, each with the whole
/// server budget, and the round ends with a single aggregation.
pub fn sl_round_time(
    users: &[UserProfile],
    model: &LatencyModel,
    fixed_cut: usize,
    server_total: f64,
) -> Result<AlgorithmTiming> {
    if users.is_empty() {
        return Err(EsflError::Validation("no users in round".into()));
    }
    let cw = model.cut(fixed_cut)?;
    let mut round_time = 0.0;
    let mut comm_time = 0.0;
    for u in users {
        let r = round_time_at(u, cw, model.total_compute, server_total, 0.0)?;
        round_time += r.total;
        comm_time += r.comm_time();
    }
    Ok(AlgorithmTiming {
        round_time: round_time + model.t_agg,
        comm_time,
    })
}
