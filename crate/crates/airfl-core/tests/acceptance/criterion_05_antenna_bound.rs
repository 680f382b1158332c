//! Criterion 5: the minimum-antenna bound reproduces hand-computed values
//! exactly and scales as the formula dictates.

use airfl_core::schemes::{min_antennas_bound, min_antennas_bound_raw};

use crate::support::verdict;

#[test]
fn criterion_05_antenna_bound_arithmetic() {
    // gamma_n = 1, sigma_h = sigma_z, K = 10, eps = 1, delta = 0.1:
    // c_n = 2, so ceil(8 * 100 / 4 * ln(600)) = ceil(200 * 6.39693...) = 1280
    let hand_computed = min_antennas_bound(1.0, 0.1, 10, 1.0, 1.0, 1.0).unwrap();
    let exact = hand_computed == 1280;

    // second hand-computed point: eps = 0.5 exactly quadruples the raw value
    let base = min_antennas_bound_raw(1.0, 0.1, 10, 1.0, 1.0, 1.0).unwrap();
    let quarter_eps = min_antennas_bound_raw(0.5, 0.1, 10, 1.0, 1.0, 1.0).unwrap();
    let eps_scaling = (quarter_eps / base - 4.0).abs() < 1e-12;

    // doubling K multiplies by slightly more than 4 (K^2 times log growth)
    let double_k = min_antennas_bound_raw(1.0, 0.1, 20, 1.0, 1.0, 1.0).unwrap();
    let k_scaling = double_k / base > 4.0 && double_k / base < 4.5;

    let pass = exact && eps_scaling && k_scaling;
    let detail = format!(
        "bound(1, 0.1, K=10) = {hand_computed} (want 1280); eps-halving x{:.6}; K-doubling x{:.4}",
        quarter_eps / base,
        double_k / base
    );
    verdict(5, "antenna bound arithmetic", pass, &detail);
    assert!(pass, "{detail}");
}
