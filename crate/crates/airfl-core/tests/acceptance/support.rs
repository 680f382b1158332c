//! Shared helpers for the acceptance criteria.

use airfl_core::learning::ModelVector;
use airfl_core::numerics::{sample_complex_gaussian, RngStream};

/// Print the canonical per-criterion verdict line.
pub fn verdict(number: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance criterion {number:>2} ({name}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// Models shaped like one federated round: a shared base vector plus small
/// device-specific updates, so the aggregate has a large common component.
pub fn fl_like_models(
    stream: RngStream,
    devices: usize,
    dim: usize,
    update_scale: f64,
) -> Vec<ModelVector> {
    let base: Vec<f64> = sample_complex_gaussian(stream.substream(0), dim, 2.0)
        .unwrap()
        .iter()
        .map(|z| 1.0 + z.re)
        .collect();
    (0..devices)
        .map(|k| {
            let delta =
                sample_complex_gaussian(stream.substream(1).substream(k as u64), dim, 2.0)
                    .unwrap();
            ModelVector::from_vec(
                base.iter()
                    .zip(delta.iter())
                    .map(|(b, d)| b + update_scale * d.re)
                    .collect(),
            )
            .unwrap()
        })
        .collect()
}

/// Mutually orthogonal zero-mean rows with unit population variance:
/// the symbol geometry under which the closed-form MSE expressions hold
/// exactly for fixed vectors.
pub fn orthonormal_zero_mean_rows(stream: RngStream, k: usize, dim: usize) -> Vec<Vec<f64>> {
    assert!(k + 1 < dim, "need k + 1 independent directions");
    let ones = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut attempt = 0u64;
    while rows.len() < k {
        let raw = sample_complex_gaussian(stream.substream(attempt), dim, 2.0).unwrap();
        attempt += 1;
        let mut v: Vec<f64> = raw.iter().map(|z| z.re).collect();
        let proj: f64 = v.iter().zip(&ones).map(|(a, b)| a * b).sum();
        for (x, o) in v.iter_mut().zip(&ones) {
            *x -= proj * o;
        }
        for r in &rows {
            let norm_sq: f64 = r.iter().map(|x| x * x).sum();
            let proj: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum::<f64>() / norm_sq;
            for (x, b) in v.iter_mut().zip(r) {
                *x -= proj * b;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-9 {
            continue;
        }
        // unit population variance: norm^2 = dim
        let scale = (dim as f64).sqrt() / norm;
        for x in v.iter_mut() {
            *x *= scale;
        }
        rows.push(v);
    }
    rows
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        let fa = i as f64 / a.len() as f64;
        let fb = j as f64 / b.len() as f64;
        d = d.max((fa - fb).abs());
    }
    d
}

/// Mean of the models indexed by `subset`.
pub fn subset_mean(models: &[ModelVector], subset: &[usize]) -> ModelVector {
    let mut out = ModelVector::zeros(models[0].dim());
    let w = 1.0 / subset.len() as f64;
    for &k in subset {
        out.add_scaled(&models[k], w);
    }
    out
}
