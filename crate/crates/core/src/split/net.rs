//! Dense layers, losses and plain backpropagation.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EsflError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Tanh,
    Sigmoid,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the output `a = f(z)`.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Softmax over the network output followed by cross-entropy against
    /// target probabilities, averaged over the batch.
    SoftmaxCrossEntropy,
    /// Batch mean of the per-sample sum of squared errors.
    SquaredError,
}

impl Loss {
    /// Loss value and its gradient with respect to the network output.
    pub fn value_and_grad(self, output: &Array2<f64>, target: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
        if output.dim() != target.dim() {
            return Err(EsflError::Shape(format!(
                "output {:?} vs target {:?}",
                output.dim(),
                target.dim()
            )));
        }
        let batch = output.nrows() as f64;
        let (value, grad) = match self {
            Loss::SquaredError => {
                let diff = output - target;
                let value = diff.iter().map(|d| d * d).sum::<f64>() / batch;
                (value, diff.mapv(|d| 2.0 * d / batch))
            }
            Loss::SoftmaxCrossEntropy => {
                let mut probs = output.clone();
                let mut value = 0.0;
                for (mut row, t) in probs.rows_mut().into_iter().zip(target.rows()) {
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
                    for (p, &y) in row.iter_mut().zip(t.iter()) {
                        let log_p = *p - log_sum;
                        value -= y * log_p;
                        *p = log_p.exp();
                    }
                }
                let grad = (probs - target).mapv(|g| g / batch);
                (value / batch, grad)
            }
        };
        if !value.is_finite() {
            return Err(EsflError::Numeric(format!("loss evaluated to {value}")));
        }
        Ok((value, grad))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `inputs × outputs`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }

    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let act = self.activation;
        (x.dot(&self.weights) + &self.bias).mapv_into(|z| act.apply(z))
    }
}

/// Parameter gradients of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    pub layers: Vec<DenseLayer>,
    pub loss: Loss,
}

impl DenseNet {
    pub fn new(layers: Vec<DenseLayer>, loss: Loss) -> Result<Self> {
        let net = DenseNet { layers, loss };
        net.validate()?;
        Ok(net)
    }

    /// Layers of widths `dims[0] → dims[1] → …` with uniform weights in
    /// `±1/√fan_in` and zero biases.
    pub fn random<R: Rng>(dims: &[usize], activations: &[Activation], loss: Loss, rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(EsflError::Shape(format!(
                "{} widths need {} activations, got {}",
                dims.len(),
                dims.len().saturating_sub(1),
                activations.len()
            )));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                DenseLayer {
                    weights: Array2::from_shape_fn((w[0], w[1]), |_| rng.random_range(-bound..bound)),
                    bias: Array1::zeros(w[1]),
                    activation,
                }
            })
            .collect();
        DenseNet::new(layers, loss)
    }

    pub fn validate(&self) -> Result<()> {
        validate_chain(&self.layers)?;
        if self.layers.is_empty() {
            return Err(EsflError::Shape("a network needs at least one layer".into()));
        }
        Ok(())
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        check_input(&self.layers, x)?;
        Ok(forward_layers(&self.layers, x).pop().expect("nonempty network"))
    }

    pub fn loss_value(&self, x: &Array2<f64>, y: &Array2<f64>) -> Result<f64> {
        Ok(self.loss.value_and_grad(&self.predict(x)?, y)?.0)
    }

    /// Loss and exact gradients of every parameter.
    pub fn gradient(&self, x: &Array2<f64>, y: &Array2<f64>) -> Result<(f64, Vec<LayerGrad>)> {
        check_input(&self.layers, x)?;
        let outputs = forward_layers(&self.layers, x);
        let (value, g) = self.loss.value_and_grad(outputs.last().expect("nonempty network"), y)?;
        let (grads, _) = backward_layers(&self.layers, x, &outputs, g);
        Ok((value, grads))
    }

    /// All parameters, layer by layer, weights (row-major) before biases.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(EsflError::Shape(format!(
                "{} values for {} parameters",
                params.len(),
                self.num_params()
            )));
        }
        let mut it = params.iter();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = *it.next().expect("length checked");
            }
        }
        Ok(())
    }

    pub fn same_structure(&self, other: &DenseNet) -> bool {
        self.loss == other.loss
            && self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weights.dim() == b.weights.dim() && a.activation == b.activation)
    }
}

/// Flattens gradients in the same order as [`DenseNet::flat_params`].
pub fn flatten_grads(grads: &[LayerGrad]) -> Vec<f64> {
    grads
        .iter()
        .flat_map(|g| g.weights.iter().chain(g.bias.iter()).copied())
        .collect()
}

pub(crate) fn validate_chain(layers: &[DenseLayer]) -> Result<()> {
    for (i, l) in layers.iter().enumerate() {
        if l.bias.len() != l.outputs() {
            return Err(EsflError::Shape(format!(
                "layer {}: {} biases for {} outputs",
                i + 1,
                l.bias.len(),
                l.outputs()
            )));
        }
    }
    for (i, w) in layers.windows(2).enumerate() {
        if w[0].outputs() != w[1].inputs() {
            return Err(EsflError::Shape(format!(
                "layer {} emits {} values but layer {} expects {}",
                i + 1,
                w[0].outputs(),
                i + 2,
                w[1].inputs()
            )));
        }
    }
    Ok(())
}

pub(crate) fn check_input(layers: &[DenseLayer], x: &Array2<f64>) -> Result<()> {
    if let Some(first) = layers.first() {
        if x.ncols() != first.inputs() {
            return Err(EsflError::Shape(format!(
                "batch has {} features, layer expects {}",
                x.ncols(),
                first.inputs()
            )));
        }
    }
    Ok(())
}

/// Output of every layer in order.
pub(crate) fn forward_layers(layers: &[DenseLayer], x: &Array2<f64>) -> Vec<Array2<f64>> {
    let mut outputs: Vec<Array2<f64>> = Vec::with_capacity(layers.len());
    for l in layers {
        let out = l.forward(outputs.last().unwrap_or(x));
        outputs.push(out);
    }
    outputs
}

/// Backpropagates `grad_out` (gradient w.r.t. the last output) through
/// `layers`, returning parameter gradients and the gradient w.r.t. `input`.
pub(crate) fn backward_layers(
    layers: &[DenseLayer],
    input: &Array2<f64>,
    outputs: &[Array2<f64>],
    grad_out: Array2<f64>,
) -> (Vec<LayerGrad>, Array2<f64>) {
    let mut grads = Vec::with_capacity(layers.len());
    let mut g = grad_out;
    for i in (0..layers.len()).rev() {
        let layer = &layers[i];
        let x = if i == 0 { input } else { &outputs[i - 1] };
        let act = layer.activation;
        let mut dz = g;
        dz.zip_mut_with(&outputs[i], |d, &a| *d *= act.derivative_from_output(a));
        let weights = x.t().dot(&dz);
        let bias = dz.sum_axis(Axis(0));
        g = dz.dot(&layer.weights.t());
        grads.push(LayerGrad { weights, bias });
    }
    grads.reverse();
    (grads, g)
}

pub(crate) fn apply_sgd(layers: &mut [DenseLayer], grads: &[LayerGrad], rate: f64) {
    for (l, g) in layers.iter_mut().zip(grads) {
        l.weights.scaled_add(-rate, &g.weights);
        l.bias.scaled_add(-rate, &g.bias);
    }
}
