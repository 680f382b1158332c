//! Deterministic solvers used by the aggregation schemes.
//!
//! Two problem families live here: the simplex-constrained quadratic program
//! that selects aggregation weights, and greedy matching-pursuit device
//! selection with equalizer design for the centralized CSIT scheme. All
//! solvers run fixed iteration schedules with no randomness, so identical
//! problems produce bit-identical solutions.

mod selection;
mod simplex;
mod weights;

pub use selection::{brute_force_selection_oracle, mp_greedy_selection, SelectionResult};
pub use simplex::{min_quadratic_over_simplex, project_to_simplex, WeightVector};
pub use weights::{solve_weight_selection, WeightProblem, WeightSolution, WeightStatus};
