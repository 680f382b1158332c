//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Tolerances are pinned in the tests themselves; Monte-Carlo checks run on
//! fixed seeds and compare against independent oracles (quadrature, grid
//! search, subset enumeration, closed-form statistics, or the physical
//! transmit chain evaluated numerically).

mod support;

mod criterion_01_unbiasedness;
mod criterion_02_mse_fidelity;
mod criterion_03_power_identity;
mod criterion_04_blind_scaling;
mod criterion_05_antenna_bound;
mod criterion_06_alpha_stable;
mod criterion_07_weight_solver;
mod criterion_08_greedy_selection;
mod criterion_09_scheme_ordering;
mod criterion_10_noiseless_collapse;
mod criterion_11_bound_validity;
mod criterion_12_gradient_checks;
