//! Criterion 7: the aggregation-weight solver. On random K = 3 instances
//! its objective lands within 1e-3 of an exhaustive simplex grid search
//! (step 0.005) while satisfying the simplex and MSE budgets; with inverse
//! batch sizes as the objective and a slack budget it returns the batch
//! proportions exactly.

use ndarray::Array2;
use rand::Rng;

use airfl_core::channel::{draw_rayleigh, make_partial_phase_view};
use airfl_core::numerics::RngStream;
use airfl_core::optim::{
    min_quadratic_over_simplex, solve_weight_selection, WeightProblem, WeightStatus,
};
use airfl_core::schemes::{stacked_compensated_channel, wafel_weight_problem};

use crate::support::verdict;

const INSTANCES: usize = 20;
const GRID_STEPS: usize = 200; // 0.005
const OBJECTIVE_TOL: f64 = 1e-3;

fn random_instance(stream: RngStream) -> WeightProblem {
    let mut rng = stream.substream(0).rng();
    // realistic quadratic form: build it from a random single-antenna round
    let channel = draw_rayleigh(stream.substream(1), 3, 1, 1.0).unwrap();
    let view = make_partial_phase_view(stream.substream(2), &channel, 0.7).unwrap();
    let h = stacked_compensated_channel(&channel, &view).unwrap();
    let sigma: Vec<f64> = (0..3).map(|_| rng.gen_range(0.2..1.5)).collect();
    let power = rng.gen_range(1.0..20.0);
    let sigma_z2 = rng.gen_range(0.1..1.0);
    let d: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..1.0)).collect();
    let mut problem =
        wafel_weight_problem(&sigma, &h, power, sigma_z2, 1.0, d).unwrap();
    // place the budget between the minimum achievable value and the value at
    // the objective minimizer (binding) or above it (slack)
    let (_, q_min) = min_quadratic_over_simplex(&problem.q).unwrap();
    let d_sum: f64 = problem.d.iter().map(|v| 1.0 / v).sum();
    let alpha_d: Vec<f64> = problem.d.iter().map(|v| 1.0 / v / d_sum).collect();
    let g0 = quad_form(&problem.q, &alpha_d);
    let u = rng.gen_range(0.15..1.4);
    problem.theta = q_min + u * (g0 - q_min).max(q_min * 1e-3);
    problem
}

fn quad_form(q: &Array2<f64>, x: &[f64]) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += x[i] * q[(i, j)] * x[j];
        }
    }
    acc
}

/// Exhaustive constrained minimum over the simplex grid.
fn grid_oracle(problem: &WeightProblem) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..=GRID_STEPS {
        for b in 0..=(GRID_STEPS - a) {
            let c = GRID_STEPS - a - b;
            let alpha = [
                a as f64 / GRID_STEPS as f64,
                b as f64 / GRID_STEPS as f64,
                c as f64 / GRID_STEPS as f64,
            ];
            if quad_form(&problem.q, &alpha) > problem.theta {
                continue;
            }
            let obj: f64 = alpha
                .iter()
                .zip(&problem.d)
                .map(|(x, dk)| x * x * dk)
                .sum();
            if obj < best {
                best = obj;
            }
        }
    }
    best
}

#[test]
fn criterion_07_weight_solver_optimality() {
    let root = RngStream::new(0xAC07);
    let mut pass = true;
    let mut worst_gap: f64 = 0.0;
    let mut binding = 0usize;
    for i in 0..INSTANCES {
        let problem = random_instance(root.substream(i as u64));
        let sol = solve_weight_selection(&problem).unwrap();
        assert_ne!(
            sol.status,
            WeightStatus::InfeasibleFallback,
            "instances are feasible by construction"
        );
        if sol.status == WeightStatus::ConstraintActive {
            binding += 1;
        }
        // simplex invariants
        let sum: f64 = sol.alpha.as_slice().iter().sum();
        pass &= (sum - 1.0).abs() <= 1e-9;
        pass &= sol.alpha.as_slice().iter().all(|&a| a >= 0.0);
        // MSE budget
        let constraint = quad_form(&problem.q, sol.alpha.as_slice());
        pass &= constraint <= problem.theta * (1.0 + 1e-6);
        // grid comparison
        let grid = grid_oracle(&problem);
        let gap = (sol.objective - grid).abs();
        worst_gap = worst_gap.max(gap);
        pass &= gap <= OBJECTIVE_TOL;
    }

    // heterogeneous objective with slack budget recovers the batch
    // proportions b_w exactly
    let batches = [4.0f64, 8.0, 16.0, 32.0, 8.0];
    let d: Vec<f64> = batches.iter().map(|b| 1.0 / b).collect();
    let problem = WeightProblem {
        q: Array2::eye(5) * 1e-6,
        d,
        theta: 1.0,
    };
    let sol = solve_weight_selection(&problem).unwrap();
    let total: f64 = batches.iter().sum();
    let mut bw_ok = sol.status == WeightStatus::ConstraintSlack;
    for (a, b) in sol.alpha.as_slice().iter().zip(&batches) {
        bw_ok &= (a - b / total).abs() < 1e-9;
    }
    pass &= bw_ok;

    let detail = format!(
        "{INSTANCES} instances ({binding} with an active budget), worst objective gap {worst_gap:.2e} (cap {OBJECTIVE_TOL}); batch-proportion recovery: {bw_ok}"
    );
    verdict(7, "weight solver optimality", pass, &detail);
    assert!(pass, "{detail}");
}
