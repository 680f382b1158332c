//! The probability simplex: weight vectors, Euclidean projection, and
//! quadratic minimization over it.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Tolerance on `|1^T alpha - 1|` for a valid weight vector.
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;

/// Nonnegative aggregation weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::invalid("weight vector must be nonempty"));
        }
        if let Some(i) = alpha.iter().position(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::invalid(format!(
                "weight {i} is negative or non-finite: {}",
                alpha[i]
            )));
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::invalid(format!(
                "weights must sum to 1 within {SIMPLEX_SUM_TOL}, got {sum}"
            )));
        }
        Ok(WeightVector(alpha))
    }

    pub fn uniform(len: usize) -> Self {
        WeightVector(vec![1.0 / len as f64; len])
    }

    /// All weight on a single device.
    pub fn vertex(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::invalid(format!(
                "vertex index {index} out of range for {len} devices"
            )));
        }
        let mut v = vec![0.0; len];
        v[index] = 1.0;
        Ok(WeightVector(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum()
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Euclidean projection onto the probability simplex by sort and threshold.
///
/// A point already on the simplex is returned unchanged.
pub fn project_to_simplex(v: &[f64]) -> Result<WeightVector> {
    if v.is_empty() {
        return Err(Error::invalid("cannot project an empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("cannot project non-finite entries"));
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut threshold = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (j as f64 + 1.0);
        if u - t > 0.0 {
            threshold = t;
        }
    }
    let alpha: Vec<f64> = v.iter().map(|&x| (x - threshold).max(0.0)).collect();
    WeightVector::new(alpha)
}

pub(crate) fn symmetric_check(q: &Array2<f64>, tol: f64) -> Result<()> {
    let n = q.nrows();
    if q.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {} x {}",
            n,
            q.ncols()
        )));
    }
    let scale = q.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (q[(i, j)] - q[(j, i)]).abs() > tol * scale {
                return Err(Error::invalid(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Cholesky-based positive-semidefiniteness check with a small diagonal
/// shift; errors if Q + tol*I fails to factor.
pub(crate) fn psd_check(q: &Array2<f64>, tol: f64) -> Result<()> {
    symmetric_check(q, tol)?;
    let n = q.nrows();
    let scale = q.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let shift = tol * scale;
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = q[(i, j)] + if i == j { shift } else { 0.0 };
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::invalid(
                        "matrix is not positive semidefinite within tolerance".to_string(),
                    ));
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(())
}

/// Largest eigenvalue bound of a symmetric matrix via deterministic power
/// iteration (uniform start, fixed schedule), padded slightly upward.
pub(crate) fn spectral_bound(q: &Array2<f64>) -> f64 {
    let n = q.nrows();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0f64;
    for _ in 0..120 {
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += q[(i, j)] * x[j];
            }
            y[i] = acc;
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return 0.0;
        }
        lambda = norm;
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
    }
    // Gershgorin fallback keeps the step size safe if iteration stalled on a
    // near-degenerate spectrum.
    let gersh = (0..n)
        .map(|i| (0..n).map(|j| q[(i, j)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    (lambda * 1.01).max(1e-12).min(gersh.max(1e-12))
}

/// Minimize `alpha^T M alpha` over the simplex with accelerated projected
/// gradient (monotone restart), starting from `start`.
///
/// `matvec` must return the gradient of the objective. Termination is on
/// the projected-gradient-mapping residual `||x - P(x - step * grad)||`,
/// which vanishes exactly at constrained stationary points (movement-based
/// stopping misfires at the turning points of the momentum oscillation).
pub(crate) fn fista_simplex(
    matvec: &impl Fn(&[f64]) -> Vec<f64>,
    lipschitz: f64,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Vec<f64> {
    let step = 1.0 / lipschitz.max(1e-12);
    let forward = |x: &[f64]| -> Vec<f64> {
        let grad = matvec(x);
        let cand: Vec<f64> = x
            .iter()
            .zip(&grad)
            .map(|(xi, gi)| xi - step * gi)
            .collect();
        project_to_simplex(&cand)
            .expect("finite iterate")
            .as_slice()
            .to_vec()
    };
    let objective = |x: &[f64]| -> f64 {
        let mx = matvec(x);
        x.iter().zip(&mx).map(|(a, b)| a * b).sum()
    };
    let distance = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };

    let mut x = project_to_simplex(start)
        .expect("finite start")
        .as_slice()
        .to_vec();
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut f_x = objective(&x);
    for _ in 0..max_iter {
        let x_next = forward(&y);
        let f_next = objective(&x_next);
        if f_next > f_x {
            // momentum overshot: restart from the best known point
            let x_pg = forward(&x);
            let f_pg = objective(&x_pg);
            let residual = distance(&x_pg, &x);
            if f_pg <= f_x {
                x = x_pg;
                f_x = f_pg;
            }
            y = x.clone();
            t = 1.0;
            if residual <= tol {
                break;
            }
            continue;
        }
        let x_map = forward(&x_next);
        let residual = distance(&x_map, &x_next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        y = x_next
            .iter()
            .zip(&x)
            .map(|(xn, xo)| xn + beta * (xn - xo))
            .collect();
        t = t_next;
        x = x_next;
        f_x = f_next;
        if residual <= tol {
            // the mapping step only improves a descent method
            let f_map = objective(&x_map);
            if f_map <= f_x {
                x = x_map;
            }
            break;
        }
    }
    x
}

/// Minimize `alpha^T Q alpha` over the probability simplex.
///
/// `Q` must be symmetric positive semidefinite. Exactly diagonal matrices
/// with positive diagonal take the closed form `alpha_k ∝ 1/q_kk`; everything
/// else runs projected gradient with a fixed deterministic schedule.
pub fn min_quadratic_over_simplex(q: &Array2<f64>) -> Result<(WeightVector, f64)> {
    psd_check(q, 1e-8)?;
    let n = q.nrows();
    let diag: Vec<f64> = (0..n).map(|i| q[(i, i)]).collect();
    let off_diag_zero = (0..n).all(|i| (0..n).all(|j| i == j || q[(i, j)] == 0.0));
    if off_diag_zero && diag.iter().all(|&d| d > 0.0) {
        let inv_sum: f64 = diag.iter().map(|d| 1.0 / d).sum();
        let alpha: Vec<f64> = diag.iter().map(|d| 1.0 / d / inv_sum).collect();
        let value = alpha.iter().zip(&diag).map(|(a, d)| a * a * d).sum();
        return Ok((WeightVector::new(alpha)?, value));
    }
    let lip = 2.0 * spectral_bound(q);
    let matvec = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| 2.0 * (0..n).map(|j| q[(i, j)] * x[j]).sum::<f64>())
            .collect()
    };
    let start = vec![1.0 / n as f64; n];
    let alpha = fista_simplex(&matvec, lip, &start, 1e-13, 30_000);
    let value = {
        let mx: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| q[(i, j)] * alpha[j]).sum::<f64>())
            .collect();
        alpha.iter().zip(&mx).map(|(a, b)| a * b).sum()
    };
    Ok((WeightVector::new(alpha)?, value))
}
