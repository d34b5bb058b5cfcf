//! Toy-scale split training on dense networks.
//!
//! A network is cut after layer `l`: the user keeps layers `1..=l`, the server
//! keeps the rest. One split update runs the user forward pass, ships the cut
//! activation to the server, lets the server finish the forward pass, take the
//! loss, backpropagate and update its layers, and ships the gradient of the
//! cut activation back so the user can finish backpropagation and update its
//! own layers. The arithmetic is exactly that of a monolithic SGD step, only
//! partitioned, which the tests check to tight tolerances.

mod aggregate;
mod data;
mod net;
mod train;

use ndarray::Array2;

use crate::error::{EsflError, Result};

pub use aggregate::federated_aggregate;
pub use data::{gaussian_blobs, linear_regression_data, Dataset};
pub use net::{flatten_grads, Activation, DenseLayer, DenseNet, LayerGrad, Loss};
pub use train::{esfl_train, LrSchedule, ToyUser, TrainOutcome};

use net::{apply_sgd, backward_layers, check_input, forward_layers};

/// A network partitioned at a cut layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitState {
    pub user_side: Vec<DenseLayer>,
    pub server_side: Vec<DenseLayer>,
    pub cut: usize,
    pub loss: Loss,
    pub learning_rate: f64,
}

impl SplitState {
    /// Cuts `net` after layer `cut`; `cut` ranges over `1..=L`, and at `L` the
    /// server side is empty.
    pub fn split(net: &DenseNet, cut: usize, learning_rate: f64) -> Result<Self> {
        let num_layers = net.num_layers();
        if cut == 0 || cut > num_layers {
            return Err(EsflError::Domain(format!("cut {cut} outside 1..={num_layers}")));
        }
        Ok(SplitState {
            user_side: net.layers[..cut].to_vec(),
            server_side: net.layers[cut..].to_vec(),
            cut,
            loss: net.loss,
            learning_rate,
        })
    }

    /// Reassembles the full network.
    pub fn concatenate(&self) -> DenseNet {
        let mut layers = self.user_side.clone();
        layers.extend(self.server_side.iter().cloned());
        DenseNet {
            layers,
            loss: self.loss,
        }
    }

    /// One split SGD step on a batch; returns the batch loss before the step.
    pub fn split_update(&mut self, x: &Array2<f64>, y: &Array2<f64>) -> Result<f64> {
        check_input(&self.user_side, x)?;

        // user: forward to the cut activation
        let user_outputs = forward_layers(&self.user_side, x);
        let activation = user_outputs.last().expect("user side has at least one layer");

        // server: forward from the received activation and take the loss
        let server_outputs = forward_layers(&self.server_side, activation);
        let prediction = server_outputs.last().unwrap_or(activation);
        let (value, grad_out) = self.loss.value_and_grad(prediction, y)?;

        // server: backpropagate to the cut, then update its own layers
        let (server_grads, grad_activation) = backward_layers(&self.server_side, activation, &server_outputs, grad_out);
        apply_sgd(&mut self.server_side, &server_grads, self.learning_rate);

        // user: backpropagate the returned activation gradient and update
        let (user_grads, _) = backward_layers(&self.user_side, x, &user_outputs, grad_activation);
        apply_sgd(&mut self.user_side, &user_grads, self.learning_rate);
        Ok(value)
    }
}

/// One full-network SGD step; returns the updated network and the batch loss
/// before the step.
pub fn monolithic_update(
    net: &DenseNet,
    x: &Array2<f64>,
    y: &Array2<f64>,
    learning_rate: f64,
) -> Result<(DenseNet, f64)> {
    let (value, grads) = net.gradient(x, y)?;
    let mut next = net.clone();
    apply_sgd(&mut next.layers, &grads, learning_rate);
    Ok((next, value))
}
