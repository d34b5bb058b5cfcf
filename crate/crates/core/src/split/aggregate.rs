//! Damped, sample-weighted model averaging.

use ndarray::Zip;

use super::net::DenseNet;
use crate::error::{EsflError, Result};

/// Moves `global` a fraction `eta` of the way towards the sample-weighted
/// mean of `locals`: `W ← W − η (W − Σ n_i W_i / N)`.
///
/// An element on which every local model agrees has exactly that value as
/// its mean, and `eta = 1` returns the mean itself.
pub fn federated_aggregate(global: &DenseNet, locals: &[(DenseNet, u64)], eta: f64) -> Result<DenseNet> {
    if locals.is_empty() {
        return Err(EsflError::Validation(
            "aggregation needs at least one local model".into(),
        ));
    }
    if !eta.is_finite() {
        return Err(EsflError::Domain(format!("aggregation step must be finite, got {eta}")));
    }
    for (i, (net, n)) in locals.iter().enumerate() {
        if !global.same_structure(net) {
            return Err(EsflError::Shape(format!(
                "local model {i} does not match the global architecture"
            )));
        }
        if *n == 0 {
            return Err(EsflError::Validation(format!("local model {i} has no samples")));
        }
    }
    let total: f64 = locals.iter().map(|(_, n)| *n as f64).sum();
    let weights: Vec<f64> = locals.iter().map(|(_, n)| *n as f64 / total).collect();

    let combine = |g: f64, values: &mut dyn Iterator<Item = f64>| -> f64 {
        let mut mean = 0.0;
        let mut first = None;
        let mut uniform = true;
        for (v, w) in values.zip(&weights) {
            match first {
                None => first = Some(v),
                Some(f) => uniform &= f == v,
            }
            mean += w * v;
        }
        if uniform {
            mean = first.expect("at least one local model");
        }
        if eta == 1.0 {
            mean
        } else {
            g - eta * (g - mean)
        }
    };

    let mut out = global.clone();
    for (li, layer) in out.layers.iter_mut().enumerate() {
        Zip::indexed(&mut layer.weights).for_each(|idx, w| {
            *w = combine(*w, &mut locals.iter().map(|(n, _)| n.layers[li].weights[idx]));
        });
        Zip::indexed(&mut layer.bias).for_each(|idx, b| {
            *b = combine(*b, &mut locals.iter().map(|(n, _)| n.layers[li].bias[idx]));
        });
    }
    Ok(out)
}
