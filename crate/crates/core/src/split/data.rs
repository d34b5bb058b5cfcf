//! Seeded synthetic datasets.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `samples × features`.
    pub x: Array2<f64>,
    /// `samples × outputs`; one-hot rows for classification.
    pub y: Array2<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    /// Rows `start..end` as a new dataset.
    pub fn slice(&self, start: usize, end: usize) -> Dataset {
        Dataset {
            x: self.x.slice(ndarray::s![start..end, ..]).to_owned(),
            y: self.y.slice(ndarray::s![start..end, ..]).to_owned(),
        }
    }

    /// Contiguous shards of the given sizes.
    pub fn shards(&self, sizes: &[usize]) -> Vec<Dataset> {
        let mut start = 0;
        sizes
            .iter()
            .map(|&n| {
                let d = self.slice(start, start + n);
                start += n;
                d
            })
            .collect()
    }

    /// All datasets stacked in order.
    pub fn concat(parts: &[Dataset]) -> Dataset {
        let xs: Vec<_> = parts.iter().map(|d| d.x.view()).collect();
        let ys: Vec<_> = parts.iter().map(|d| d.y.view()).collect();
        Dataset {
            x: ndarray::concatenate(ndarray::Axis(0), &xs).expect("matching feature widths"),
            y: ndarray::concatenate(ndarray::Axis(0), &ys).expect("matching output widths"),
        }
    }
}

/// `samples` points spread over `classes` Gaussian clusters with centers drawn
/// from a standard normal scaled by 3; labels cycle through the classes.
pub fn gaussian_blobs<R: Rng>(samples: usize, features: usize, classes: usize, spread: f64, rng: &mut R) -> Dataset {
    let centers = Array2::from_shape_fn((classes, features), |_| 3.0 * rng.sample::<f64, _>(StandardNormal));
    let mut x = Array2::zeros((samples, features));
    let mut y = Array2::zeros((samples, classes));
    for i in 0..samples {
        let c = i % classes;
        for j in 0..features {
            x[[i, j]] = centers[[c, j]] + spread * rng.sample::<f64, _>(StandardNormal);
        }
        y[[i, c]] = 1.0;
    }
    Dataset { x, y }
}

/// Noisy targets of a random linear map, for regression toys.
pub fn linear_regression_data<R: Rng>(
    samples: usize,
    features: usize,
    outputs: usize,
    noise: f64,
    rng: &mut R,
) -> Dataset {
    let w = Array2::from_shape_fn((features, outputs), |_| rng.sample::<f64, _>(StandardNormal));
    let b = Array1::from_shape_fn(outputs, |_| rng.sample::<f64, _>(StandardNormal));
    let x = Array2::from_shape_fn((samples, features), |_| rng.sample::<f64, _>(StandardNormal));
    let mut y = x.dot(&w) + &b;
    y.mapv_inplace(|v| v + noise * rng.sample::<f64, _>(StandardNormal));
    Dataset { x, y }
}
