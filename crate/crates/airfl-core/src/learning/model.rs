//! Flat parameter vector shared by training and aggregation.

use crate::error::{Error, Result};

/// A model as a flat `s`-dimensional real vector.
///
/// Layouts are fixed per loss kind (layer by layer, weights then biases); all
/// devices and all rounds share one dimension. Entries are finite by
/// construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelVector(Vec<f64>);

impl ModelVector {
    pub fn zeros(dim: usize) -> Self {
        ModelVector(vec![0.0; dim])
    }

    pub fn from_vec(params: Vec<f64>) -> Result<Self> {
        if let Some(i) = params.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite model parameter at index {i}"
            )));
        }
        Ok(ModelVector(params))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &ModelVector, scale: f64) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.0 {
            *a *= factor;
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn distance(&self, other: &ModelVector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Entry mean and population standard deviation.
    pub fn entry_stats(&self) -> (f64, f64) {
        let s = self.0.len() as f64;
        let mean = self.0.iter().sum::<f64>() / s;
        let var = self.0.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / s;
        (mean, var.sqrt())
    }
}

/// `sum_k weights[k] * models[k]`, with no validation of the weights.
pub(crate) fn weighted_sum(models: &[ModelVector], weights: &[f64]) -> ModelVector {
    debug_assert_eq!(models.len(), weights.len());
    let dim = models.first().map_or(0, ModelVector::dim);
    let mut out = ModelVector::zeros(dim);
    for (m, &w) in models.iter().zip(weights) {
        out.add_scaled(m, w);
    }
    out
}
