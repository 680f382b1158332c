//! Criterion 3: the truncated-power-control denormalizer satisfies the
//! average power constraint — Monte-Carlo transmit power equals the budget
//! within 2% for several thresholds.

use airfl_core::numerics::RngStream;
use airfl_core::schemes::expected_power_check;

use crate::support::verdict;

#[test]
fn criterion_03_power_constraint_identity() {
    let root = RngStream::new(0xAC03);
    let cases = [(0.2, 4.0), (1.0, 1.0), (3.0, 2.5)];
    let mut pass = true;
    let mut details = Vec::new();
    for (i, &(theta, power)) in cases.iter().enumerate() {
        let measured =
            expected_power_check(root.substream(i as u64), theta, power, 1_000_000).unwrap();
        let rel = (measured - power).abs() / power;
        pass &= rel <= 0.02;
        details.push(format!("theta={theta}: {measured:.4} vs {power} ({rel:.4})"));
    }
    let detail = details.join("; ");
    verdict(3, "power-constraint identity", pass, &detail);
    assert!(pass, "{detail}");
}
