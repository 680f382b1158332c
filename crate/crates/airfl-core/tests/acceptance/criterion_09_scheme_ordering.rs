//! Criterion 9: the desk-scale scheme comparison. Thirty devices, three
//! local steps, SNR 10, logistic regression on the synthetic non-i.i.d.
//! task, one hundred rounds, ten paired repetitions. The mean final
//! accuracies must order error-free >= weighted >= truncated-inversion >=
//! phase-compensation-only; the magnitudes are not targets.

use airfl_core::harness::{parse_config, run_experiment};

use crate::support::verdict;

const CONFIG: &str = r#"
seed = 9090
repetitions = 10
output = "unused"

[task]
loss = "logistic"
devices = 30
classes = 10
dim = 10
samples_per_device = 40
classes_per_device = 2
test_samples = 2000

[training]
rounds = 100
local_steps = 3
batch = 16
lr = 0.08

[channel]
model = "rayleigh"
sigma_h2 = 1.0
antennas = 1
phase_error_bound = 0.7853981633974483

[noise]
snr = 10.0

[[schemes]]
kind = "ideal"

[[schemes]]
kind = "wafel"
mse_budget = 0.01

[[schemes]]
kind = "local_csit"
threshold = 0.5

[[schemes]]
kind = "partial_phase"
"#;

#[test]
fn criterion_09_scheme_ordering_at_reference_settings() {
    let cfg = parse_config(CONFIG).unwrap();
    let report = run_experiment(&cfg).unwrap();
    assert!(!report.any_aborted(), "failures: {:?}", report.failures);

    let accuracy = |name: &str| -> f64 {
        report
            .summary
            .schemes
            .iter()
            .find(|s| s.scheme == name)
            .expect("scheme present")
            .final_accuracy_mean
    };
    let ideal = accuracy("ideal");
    let wafel = accuracy("wafel");
    let local = accuracy("local_csit");
    let gbma = accuracy("partial_phase");

    let pass = ideal >= wafel && wafel >= local && local >= gbma;
    let detail = format!(
        "mean final accuracy over 10 paired repetitions: ideal {ideal:.4} >= wafel {wafel:.4} >= local_csit {local:.4} >= partial_phase {gbma:.4}"
    );
    verdict(9, "scheme ordering at reference settings", pass, &detail);
    assert!(pass, "{detail}");
}
