//! Device-local mini-batch SGD.

use rand::seq::SliceRandom;

use crate::error::Result;
use crate::learning::losses::{gradient_on, LossKind};
use crate::learning::model::ModelVector;
use crate::learning::task::DeviceData;
use crate::numerics::RngStream;

/// Run `tau` mini-batch SGD steps on one device's data.
///
/// Batches are drawn without replacement from a shuffled index pool that is
/// reshuffled once exhausted; a batch size at or above the dataset size
/// degenerates to full-gradient steps. Deterministic in `stream`.
pub fn local_sgd(
    model: &ModelVector,
    data: &DeviceData,
    loss: LossKind,
    learning_rate: f64,
    tau: usize,
    batch: usize,
    stream: RngStream,
) -> Result<ModelVector> {
    let n = data.len();
    let effective_batch = batch.min(n).max(1);
    let mut rng = stream.rng();
    let mut pool: Vec<usize> = (0..n).collect();
    pool.shuffle(&mut rng);
    let mut cursor = 0usize;

    let mut current = model.clone();
    for _ in 0..tau {
        if cursor + effective_batch > n {
            pool.shuffle(&mut rng);
            cursor = 0;
        }
        let batch_idx = &pool[cursor..cursor + effective_batch];
        cursor += effective_batch;
        let grad = gradient_on(loss, &current, &data.features, &data.labels, Some(batch_idx));
        for (w, g) in current.as_mut_slice().iter_mut().zip(&grad) {
            *w -= learning_rate * g;
        }
    }
    ModelVector::from_vec(current.into_vec())
}
