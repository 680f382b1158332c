//! Criterion 8: greedy matching-pursuit device selection is always feasible
//! and, on at least 80% of random (K = 8, M = 2) instances, selects within
//! one device of the subset-enumeration optimum under the same equalizer
//! rule.

use airfl_core::channel::draw_rayleigh;
use airfl_core::numerics::RngStream;
use airfl_core::optim::{brute_force_selection_oracle, mp_greedy_selection};

use crate::support::verdict;

#[test]
fn criterion_08_greedy_matches_enumeration() {
    let root = RngStream::new(0xAC08);
    let instances = 100;
    let theta = 3.0;
    let (power, sigma_z2) = (10.0, 1.0);
    let mut within_one = 0usize;
    let mut always_feasible = true;
    let mut never_beats_oracle = true;
    for i in 0..instances {
        let channel = draw_rayleigh(root.substream(i as u64), 8, 2, 1.0).unwrap();
        let greedy = mp_greedy_selection(&channel, power, sigma_z2, theta).unwrap();
        let oracle = brute_force_selection_oracle(&channel, power, sigma_z2, theta).unwrap();
        always_feasible &= !greedy.is_empty() && greedy.achieved_constraint <= theta * (1.0 + 1e-9);
        never_beats_oracle &= oracle.active.len() >= greedy.active.len();
        if oracle.active.len() - greedy.active.len() <= 1 {
            within_one += 1;
        }
    }
    let rate = within_one as f64 / instances as f64;
    let pass = always_feasible && never_beats_oracle && rate >= 0.80;
    let detail = format!(
        "feasible on all instances: {always_feasible}; |S| within 1 of the enumeration optimum on {within_one}/{instances} ({rate:.2})"
    );
    verdict(8, "greedy device selection", pass, &detail);
    assert!(pass, "{detail}");
}
