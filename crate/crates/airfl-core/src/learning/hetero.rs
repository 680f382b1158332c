//! Computational heterogeneity: deadline-normalized batch sizes.

use crate::error::{Error, Result};

/// Per-device compute profile and the derived aggregation quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct HeterogeneityProfile {
    /// Relative compute speeds f_k > 0.
    pub speeds: Vec<f64>,
    /// Deadline-normalized batch sizes B_k (slowest device gets the
    /// reference batch).
    pub batch_sizes: Vec<usize>,
    /// b_w = B_k / B_total — the heterogeneity-aware aggregation weights.
    pub weight_target: Vec<f64>,
    /// b_s = 1 / B_k — the gradient-noise scale entering the weight
    /// objective.
    pub noise_scale: Vec<f64>,
}

/// Assign batch sizes proportional to `1 / f_k`, normalized so the slowest
/// device computes `batch_ref` samples within the common deadline.
pub fn assign_heterogeneous_batches(
    speeds: &[f64],
    batch_ref: usize,
) -> Result<HeterogeneityProfile> {
    if speeds.is_empty() {
        return Err(Error::invalid("need at least one device speed"));
    }
    if batch_ref == 0 {
        return Err(Error::invalid("reference batch size must be positive"));
    }
    if speeds.iter().any(|&f| !f.is_finite() || f <= 0.0) {
        return Err(Error::invalid("device speeds must be positive"));
    }
    let f_min = speeds.iter().cloned().fold(f64::INFINITY, f64::min);
    let batch_sizes: Vec<usize> = speeds
        .iter()
        .map(|&f| ((batch_ref as f64 * f_min / f).round().max(1.0)) as usize)
        .collect();
    let total: usize = batch_sizes.iter().sum();
    let weight_target: Vec<f64> = batch_sizes
        .iter()
        .map(|&b| b as f64 / total as f64)
        .collect();
    let noise_scale: Vec<f64> = batch_sizes.iter().map(|&b| 1.0 / b as f64).collect();
    Ok(HeterogeneityProfile {
        speeds: speeds.to_vec(),
        batch_sizes,
        weight_target,
        noise_scale,
    })
}
