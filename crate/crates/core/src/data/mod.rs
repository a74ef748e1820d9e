//! Dataset containers, deterministic splitting, the persistent-minibatch
//! scheduler and dataset generation/ingestion.

mod blobs;
mod io;
mod schedule;

pub use blobs::generate_blobs;
pub use io::{load_csv, load_idx, save_csv};
pub use schedule::{make_epoch_schedule, PersistencyPolicy, ScheduleEntry};

use crate::error::{Error, Result};
use crate::rng::{self, XorShift64Star};
use crate::shape::Shape;

/// An immutable labeled dataset. Features are stored flat, row-major, one
/// example after another; labels are class indices in `[0, num_classes)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    input_shape: Shape,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        num_classes: usize,
        input_shape: Shape,
    ) -> Result<Self> {
        let d = input_shape.len();
        if d == 0 {
            return Err(Error::Config("input shape must be non-empty".into()));
        }
        if labels.is_empty() {
            return Err(Error::Config("dataset must contain at least one example".into()));
        }
        if features.len() != labels.len() * d {
            return Err(Error::Config(format!(
                "{} feature values do not match {} examples of size {d}",
                features.len(),
                labels.len()
            )));
        }
        if num_classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Config(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
            input_shape,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn feature_len(&self) -> usize {
        self.input_shape.len()
    }

    pub fn example(&self, index: usize) -> &[f64] {
        let d = self.feature_len();
        &self.features[index * d..(index + 1) * d]
    }

    pub fn label(&self, index: usize) -> usize {
        self.labels[index]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Copies the given examples into a contiguous [`Minibatch`]. This is
    /// the "minibatch load" the training loop counts: reusing a minibatch
    /// shares the materialized buffer instead of loading a new one.
    pub fn materialize(&self, indices: &[usize]) -> Minibatch {
        let d = self.feature_len();
        let mut features = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.example(i));
            labels.push(self.labels[i]);
        }
        Minibatch { features, labels }
    }

    /// Deterministic shuffled split into disjoint, exhaustive train/test
    /// sets. The train side gets `floor(train_fraction * len)` examples.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must lie strictly between 0 and 1, got {train_fraction}"
            )));
        }
        let n = self.len();
        let n_train = (train_fraction * n as f64).floor() as usize;
        if n_train == 0 || n_train == n {
            return Err(Error::Config(format!(
                "split of {n} examples at fraction {train_fraction} leaves one side empty"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = XorShift64Star::new(rng::derive_seed(seed, rng::stream::SPLIT));
        rng.shuffle(&mut order);
        let gather = |idx: &[usize]| -> Dataset {
            let mb = self.materialize(idx);
            Dataset {
                features: mb.features,
                labels: mb.labels,
                num_classes: self.num_classes,
                input_shape: self.input_shape,
            }
        };
        Ok((gather(&order[..n_train]), gather(&order[n_train..])))
    }
}

/// A materialized minibatch: contiguous features and labels for up to `m`
/// examples.
#[derive(Debug, Clone)]
pub struct Minibatch {
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl Minibatch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}
