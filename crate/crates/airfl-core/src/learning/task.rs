//! Synthetic non-i.i.d. federated classification tasks.
//!
//! Gaussian class clusters with task-wide fixed means; each device sees only
//! a small subset of classes (label skew) and a dataset size drawn
//! log-uniformly over a 4x range (size skew). A held-out test set is drawn
//! i.i.d. across all classes.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::learning::losses::{accuracy_on, check_model_shape, gradient_on, loss_on, LossKind};
use crate::learning::model::ModelVector;
use crate::numerics::RngStream;

/// Distance scale between class means, relative to the unit within-class
/// deviation.
const CLASS_SEPARATION: f64 = 3.0;

/// One device's private dataset.
#[derive(Clone, Debug)]
pub struct DeviceData {
    /// `n x d`, one sample per row.
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
}

impl DeviceData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// A federated task: per-device datasets, the loss family, and a held-out
/// evaluation split.
#[derive(Clone, Debug)]
pub struct FederatedTask {
    pub devices: Vec<DeviceData>,
    pub loss: LossKind,
    pub feature_dim: usize,
    pub classes: usize,
    pub classes_per_device: usize,
    pub test: DeviceData,
}

impl FederatedTask {
    pub fn model_dim(&self) -> usize {
        self.loss.model_dim(self.feature_dim, self.classes)
    }

    pub fn device_count(&self) -> usize {
        self.devices.len()
    }

    pub fn total_samples(&self) -> usize {
        self.devices.iter().map(DeviceData::len).sum()
    }

    pub fn init_model(&self, stream: RngStream) -> ModelVector {
        self.loss.init_model(self.feature_dim, self.classes, stream)
    }

    /// Global training loss: the size-weighted average of device losses,
    /// i.e. the mean over the union of all samples.
    pub fn global_loss(&self, model: &ModelVector) -> Result<f64> {
        check_model_shape(self.loss, model, self.feature_dim, self.classes)?;
        let total = self.total_samples() as f64;
        let mut acc = 0.0;
        for dev in &self.devices {
            acc += loss_on(self.loss, model, &dev.features, &dev.labels, None)
                * dev.len() as f64
                / total;
        }
        Ok(acc)
    }

    /// Gradient of the global training loss.
    pub fn global_gradient(&self, model: &ModelVector) -> Result<ModelVector> {
        check_model_shape(self.loss, model, self.feature_dim, self.classes)?;
        let total = self.total_samples() as f64;
        let mut acc = vec![0.0; model.dim()];
        for dev in &self.devices {
            let g = gradient_on(self.loss, model, &dev.features, &dev.labels, None);
            let w = dev.len() as f64 / total;
            for (a, gi) in acc.iter_mut().zip(&g) {
                *a += w * gi;
            }
        }
        ModelVector::from_vec(acc)
    }

    /// Loss of one device (full local dataset).
    pub fn device_loss(&self, device: usize, model: &ModelVector) -> f64 {
        let dev = &self.devices[device];
        loss_on(self.loss, model, &dev.features, &dev.labels, None)
    }

    pub fn test_loss(&self, model: &ModelVector) -> f64 {
        loss_on(self.loss, model, &self.test.features, &self.test.labels, None)
    }

    pub fn test_accuracy(&self, model: &ModelVector) -> f64 {
        accuracy_on(self.loss, model, &self.test.features, &self.test.labels)
    }

    /// Per-class sample counts over all devices.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0usize; self.classes];
        for dev in &self.devices {
            for &y in &dev.labels {
                hist[y] += 1;
            }
        }
        hist
    }
}

fn draw_gaussian_vec(rng: &mut impl Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let g: f64 = rng.sample(StandardNormal);
            g * scale
        })
        .collect()
}

/// Generate a synthetic non-i.i.d. classification task.
///
/// Class means are drawn once per task; device `k` holds samples from
/// exactly `classes_per_device` classes assigned round-robin (so global
/// class coverage stays balanced), with its dataset size drawn log-uniformly
/// from `[samples_per_device / 2, samples_per_device * 2]`.
#[allow(clippy::too_many_arguments)]
pub fn generate_synthetic_task(
    stream: RngStream,
    devices: usize,
    classes: usize,
    feature_dim: usize,
    samples_per_device: usize,
    classes_per_device: usize,
    loss: LossKind,
    test_samples: usize,
) -> Result<FederatedTask> {
    if classes < 2 {
        return Err(Error::invalid("need at least two classes"));
    }
    if feature_dim == 0 || devices == 0 || samples_per_device == 0 {
        return Err(Error::invalid(
            "devices, feature dimension, and samples per device must be positive",
        ));
    }
    if classes_per_device == 0 || classes_per_device > classes {
        return Err(Error::invalid(format!(
            "classes per device must lie in 1..={classes}, got {classes_per_device}"
        )));
    }
    if let LossKind::Perceptron { hidden } = loss {
        if hidden == 0 {
            return Err(Error::invalid("perceptron needs at least one hidden unit"));
        }
    }

    let mut mean_rng = stream.substream(0).rng();
    let class_means: Vec<Vec<f64>> = (0..classes)
        .map(|_| draw_gaussian_vec(&mut mean_rng, feature_dim, CLASS_SEPARATION))
        .collect();

    let mut device_sets = Vec::with_capacity(devices);
    for k in 0..devices {
        let own: Vec<usize> = (0..classes_per_device)
            .map(|j| (k * classes_per_device + j) % classes)
            .collect();
        let mut rng = stream.substream(1).substream(k as u64).rng();
        let low = (samples_per_device as f64 / 2.0).ln();
        let high = (samples_per_device as f64 * 2.0).ln();
        let size = rng.gen_range(low..high).exp().round().max(1.0) as usize;
        let mut rows = Vec::with_capacity(size * feature_dim);
        let mut labels = Vec::with_capacity(size);
        for i in 0..size {
            // cycle through the device's classes for an even local split
            let class = own[i % own.len()];
            let mean = &class_means[class];
            for &m in mean.iter() {
                let g: f64 = rng.sample(StandardNormal);
                rows.push(m + g);
            }
            labels.push(class);
        }
        let features = Array2::from_shape_vec((size, feature_dim), rows)
            .expect("row count matches samples");
        device_sets.push(DeviceData { features, labels });
    }

    let mut test_rng = stream.substream(2).rng();
    let mut rows = Vec::with_capacity(test_samples * feature_dim);
    let mut labels = Vec::with_capacity(test_samples);
    for _ in 0..test_samples.max(1) {
        let class = test_rng.gen_range(0..classes);
        for &m in class_means[class].iter() {
            let g: f64 = test_rng.sample(StandardNormal);
            rows.push(m + g);
        }
        labels.push(class);
    }
    let test = DeviceData {
        features: Array2::from_shape_vec((labels.len(), feature_dim), rows)
            .expect("row count matches samples"),
        labels,
    };

    Ok(FederatedTask {
        devices: device_sets,
        loss,
        feature_dim,
        classes,
        classes_per_device,
        test,
    })
}
