//! Multi-round split federated training on toy data.

use serde::{Deserialize, Serialize};

use super::aggregate::federated_aggregate;
use super::data::Dataset;
use super::net::DenseNet;
use super::SplitState;
use crate::error::{EsflError, Result};

/// Learning rate `ρ_r = ρ_0 / (1 + r / decay_rounds)` for 0-based round `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrSchedule {
    pub rho0: f64,
    pub decay_rounds: f64,
}

impl LrSchedule {
    pub fn new(rho0: f64) -> Self {
        LrSchedule {
            rho0,
            decay_rounds: 100.0,
        }
    }

    pub fn rate(&self, round: usize) -> f64 {
        self.rho0 / (1.0 + round as f64 / self.decay_rounds)
    }
}

/// One participant: its local data, cut layer and local epochs per round.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyUser {
    pub data: Dataset,
    pub cut: usize,
    pub epochs: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub net: DenseNet,
    /// Loss of the global model on all users' data, before the first round
    /// and after every round.
    pub losses: Vec<f64>,
}

/// Mini-batch boundaries of one epoch over `len` samples; `batch_size = 0`
/// means one full batch.
pub(crate) fn batches(len: usize, batch_size: usize) -> Vec<(usize, usize)> {
    let step = if batch_size == 0 { len } else { batch_size };
    (0..len)
        .step_by(step.max(1))
        .map(|s| (s, (s + step).min(len)))
        .collect()
}

/// Runs `rounds` rounds of distribute, local split updates and aggregation.
pub fn esfl_train(
    global: &DenseNet,
    users: &[ToyUser],
    rounds: usize,
    eta: f64,
    schedule: LrSchedule,
    batch_size: usize,
) -> Result<TrainOutcome> {
    if users.is_empty() {
        return Err(EsflError::Validation("training needs at least one user".into()));
    }
    if let Some(u) = users.iter().find(|u| u.data.is_empty()) {
        return Err(EsflError::Validation(format!(
            "a user with cut {} has no samples",
            u.cut
        )));
    }
    let pooled = Dataset::concat(&users.iter().map(|u| u.data.clone()).collect::<Vec<_>>());
    let mut net = global.clone();
    let mut losses = vec![net.loss_value(&pooled.x, &pooled.y)?];
    for r in 0..rounds {
        let rate = schedule.rate(r);
        let mut locals = Vec::with_capacity(users.len());
        for u in users {
            let mut state = SplitState::split(&net, u.cut, rate)?;
            for _ in 0..u.epochs {
                for (s, e) in batches(u.data.len(), batch_size) {
                    let b = u.data.slice(s, e);
                    state.split_update(&b.x, &b.y)?;
                }
            }
            locals.push((state.concatenate(), u.data.len() as u64));
        }
        net = federated_aggregate(&net, &locals, eta)?;
        losses.push(net.loss_value(&pooled.x, &pooled.y)?);
    }
    Ok(TrainOutcome { net, losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::split::{gaussian_blobs, monolithic_update, Activation, Loss};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(seed: u64) -> (DenseNet, Dataset) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = DenseNet::random(
            &[2, 5, 4, 3],
            &[Activation::Tanh, Activation::Tanh, Activation::Linear],
            Loss::SoftmaxCrossEntropy,
            &mut rng,
        )
        .unwrap();
        (net, gaussian_blobs(40, 2, 3, 0.7, &mut rng))
    }

    #[test]
    fn schedule_decays() {
        let s = LrSchedule::new(0.2);
        assert_eq!(s.rate(0), 0.2);
        assert_eq!(s.rate(100), 0.1);
    }

    #[test]
    fn batching() {
        assert_eq!(batches(5, 2), vec![(0, 2), (2, 4), (4, 5)]);
        assert_eq!(batches(5, 0), vec![(0, 5)]);
    }

    #[test]
    fn one_user_matches_monolithic_sgd() {
        let (net, data) = setup(1);
        let schedule = LrSchedule::new(0.3);
        for cut in 1..=3 {
            let user = ToyUser {
                data: data.clone(),
                cut,
                epochs: 2,
            };
            let out = esfl_train(&net, &[user], 4, 1.0, schedule, 8).unwrap();
            let mut mono = net.clone();
            for r in 0..4 {
                for _ in 0..2 {
                    for (s, e) in batches(data.len(), 8) {
                        let b = data.slice(s, e);
                        mono = monolithic_update(&mono, &b.x, &b.y, schedule.rate(r)).unwrap().0;
                    }
                }
            }
            assert_eq!(out.net, mono, "cut {cut}");
        }
    }

    #[test]
    fn identical_users_aggregate_to_any_local() {
        let (net, data) = setup(2);
        let users: Vec<_> = (1..=3)
            .map(|_| ToyUser {
                data: data.clone(),
                cut: 2,
                epochs: 1,
            })
            .collect();
        let many = esfl_train(&net, &users, 3, 0.7, LrSchedule::new(0.1), 10).unwrap();
        let one = esfl_train(&net, &users[..1], 3, 0.7, LrSchedule::new(0.1), 10).unwrap();
        assert_eq!(many.net, one.net);
    }

    #[test]
    fn loss_decreases_on_blobs() {
        let (net, data) = setup(3);
        let shards = data.shards(&[20, 20]);
        let users: Vec<_> = shards
            .into_iter()
            .zip([1, 2])
            .map(|(d, cut)| ToyUser {
                data: d,
                cut,
                epochs: 1,
            })
            .collect();
        let out = esfl_train(&net, &users, 50, 1.0, LrSchedule::new(0.2), 0).unwrap();
        assert_eq!(out.losses.len(), 51);
        assert!(out.losses.last().unwrap() < out.losses.first().unwrap());
    }
}
