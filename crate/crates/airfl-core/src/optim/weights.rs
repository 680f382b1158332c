//! Aggregation-weight selection: minimize a diagonal quadratic over the
//! simplex subject to an MSE budget.
//!
//! The problem is
//!
//! ```text
//!     minimize    alpha^T diag(d) alpha
//!     subject to  alpha^T Q alpha <= theta,   alpha >= 0,  1^T alpha = 1
//! ```
//!
//! solved by Lagrangian bisection: for a multiplier `lambda >= 0` the inner
//! problem `min alpha^T (diag(d) + lambda Q) alpha` over the simplex is
//! solved by projected gradient, and `lambda` is bisected until the MSE
//! constraint is active (or slack at `lambda = 0`). The constraint value is
//! non-increasing in `lambda`, which makes the bisection sound.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::optim::simplex::{fista_simplex, psd_check, spectral_bound, WeightVector};

/// Relative tolerance for declaring the MSE constraint active.
const CONSTRAINT_TOL: f64 = 1e-6;
/// Maximum outer bisection iterations.
const MAX_BISECTIONS: usize = 200;
/// Inner projected-gradient settings.
const INNER_TOL: f64 = 1e-13;
const INNER_ITERS: usize = 30_000;

/// A weight-selection instance.
#[derive(Clone, Debug)]
pub struct WeightProblem {
    /// Symmetric PSD matrix of the MSE quadratic form (without the model
    /// dimension factor).
    pub q: Array2<f64>,
    /// Positive diagonal of the objective: all ones for homogeneous devices,
    /// inverse batch sizes for heterogeneous ones.
    pub d: Vec<f64>,
    /// MSE budget, > 0.
    pub theta: f64,
}

impl WeightProblem {
    pub fn validate(&self) -> Result<()> {
        psd_check(&self.q, 1e-8)?;
        if self.q.nrows() != self.d.len() {
            return Err(Error::DimensionMismatch(format!(
                "Q is {} x {} but d has length {}",
                self.q.nrows(),
                self.q.ncols(),
                self.d.len()
            )));
        }
        if self.d.iter().any(|&d| !d.is_finite() || d <= 0.0) {
            return Err(Error::invalid("objective diagonal must be positive"));
        }
        if !self.theta.is_finite() || self.theta <= 0.0 {
            return Err(Error::invalid(format!(
                "MSE budget must be positive, got {}",
                self.theta
            )));
        }
        Ok(())
    }

    fn constraint_value(&self, alpha: &[f64]) -> f64 {
        let n = alpha.len();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.q[(i, j)] * alpha[j];
            }
            acc += alpha[i] * row;
        }
        acc
    }

    fn objective_value(&self, alpha: &[f64]) -> f64 {
        alpha.iter().zip(&self.d).map(|(a, d)| a * a * d).sum()
    }
}

/// Outcome classification for [`solve_weight_selection`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightStatus {
    /// The unconstrained minimizer of the objective already satisfies the
    /// MSE budget.
    ConstraintSlack,
    /// Solved on the constraint boundary.
    ConstraintActive,
    /// No simplex point meets the budget; the returned weights minimize the
    /// MSE instead.
    InfeasibleFallback,
}

/// Solution returned by [`solve_weight_selection`].
#[derive(Clone, Debug)]
pub struct WeightSolution {
    pub alpha: WeightVector,
    pub status: WeightStatus,
    /// Final Lagrange multiplier (0 when slack; meaningless for fallback).
    pub lambda: f64,
    pub objective: f64,
    pub constraint_value: f64,
    /// `(lambda, alpha^T Q alpha)` pairs in evaluation order; sorted by
    /// lambda the second component is non-increasing.
    pub trace: Vec<(f64, f64)>,
}

impl WeightSolution {
    /// `|lambda * (constraint - theta)|`, the complementary-slackness
    /// residual against the given budget.
    pub fn complementarity_residual(&self, theta: f64) -> f64 {
        match self.status {
            WeightStatus::InfeasibleFallback => 0.0,
            _ => (self.lambda * (self.constraint_value - theta)).abs(),
        }
    }
}

fn inner_solve(problem: &WeightProblem, lambda: f64, lipschitz: f64, start: &[f64]) -> Vec<f64> {
    let n = problem.d.len();
    let matvec = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut acc = problem.d[i] * x[i];
                for j in 0..n {
                    acc += lambda * problem.q[(i, j)] * x[j];
                }
                2.0 * acc
            })
            .collect()
    };
    fista_simplex(&matvec, lipschitz, start, INNER_TOL, INNER_ITERS)
}

/// Solve the weight-selection problem.
///
/// Returns the optimal weights with status, or the minimum-MSE weights
/// flagged [`WeightStatus::InfeasibleFallback`] when the budget is
/// unattainable. Deterministic: fixed schedules, no randomness.
pub fn solve_weight_selection(problem: &WeightProblem) -> Result<WeightSolution> {
    problem.validate()?;
    let n = problem.d.len();
    let d_max = problem.d.iter().cloned().fold(0.0f64, f64::max);
    let q_bound = spectral_bound(&problem.q);
    let mut trace = Vec::new();

    // lambda = 0: closed form, objective is diagonal.
    let inv_sum: f64 = problem.d.iter().map(|d| 1.0 / d).sum();
    let alpha0: Vec<f64> = problem.d.iter().map(|d| 1.0 / d / inv_sum).collect();
    let g0 = problem.constraint_value(&alpha0);
    trace.push((0.0, g0));
    if g0 <= problem.theta * (1.0 + CONSTRAINT_TOL) {
        let objective = problem.objective_value(&alpha0);
        return Ok(WeightSolution {
            alpha: WeightVector::new(alpha0)?,
            status: WeightStatus::ConstraintSlack,
            lambda: 0.0,
            objective,
            constraint_value: g0,
            trace,
        });
    }

    // Feasibility: the MSE-minimal simplex point.
    let lip_q = 2.0 * q_bound.max(1e-12);
    let alpha_q = fista_simplex(
        &|x: &[f64]| {
            (0..n)
                .map(|i| 2.0 * (0..n).map(|j| problem.q[(i, j)] * x[j]).sum::<f64>())
                .collect()
        },
        lip_q,
        &vec![1.0 / n as f64; n],
        INNER_TOL,
        INNER_ITERS,
    );
    let q_min = problem.constraint_value(&alpha_q);
    if q_min > problem.theta {
        let objective = problem.objective_value(&alpha_q);
        return Ok(WeightSolution {
            alpha: WeightVector::new(alpha_q)?,
            status: WeightStatus::InfeasibleFallback,
            lambda: f64::INFINITY,
            objective,
            constraint_value: q_min,
            trace,
        });
    }

    // Grow lambda until feasible, then bisect. Inner solves warm-start from
    // the previous iterate.
    let lipschitz = |lambda: f64| 2.0 * (d_max + lambda * q_bound).max(1e-12);
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut warm = alpha0.clone();
    let mut best: Option<(Vec<f64>, f64, f64)> = None; // (alpha, lambda, g)
    for _ in 0..64 {
        warm = inner_solve(problem, hi, lipschitz(hi), &warm);
        let g = problem.constraint_value(&warm);
        trace.push((hi, g));
        if g <= problem.theta {
            best = Some((warm.clone(), hi, g));
            break;
        }
        lo = hi;
        hi *= 4.0;
    }
    let (mut best_alpha, mut best_lambda, mut best_g) = match best {
        Some(b) => b,
        // The doubling cap was hit; fall back to the MSE minimizer, which is
        // feasible here.
        None => (alpha_q.clone(), f64::INFINITY, q_min),
    };

    if best_lambda.is_finite() {
        for _ in 0..MAX_BISECTIONS {
            if (best_g - problem.theta).abs() <= CONSTRAINT_TOL * problem.theta
                || (hi - lo) <= 1e-12 * hi.max(1.0)
            {
                break;
            }
            let mid = 0.5 * (lo + hi);
            warm = inner_solve(problem, mid, lipschitz(mid), &warm);
            let g = problem.constraint_value(&warm);
            trace.push((mid, g));
            if g <= problem.theta {
                hi = mid;
                best_alpha = warm.clone();
                best_lambda = mid;
                best_g = g;
            } else {
                lo = mid;
            }
        }
    }

    let objective = problem.objective_value(&best_alpha);
    Ok(WeightSolution {
        alpha: WeightVector::new(best_alpha)?,
        status: WeightStatus::ConstraintActive,
        lambda: best_lambda,
        objective,
        constraint_value: best_g,
        trace,
    })
}
