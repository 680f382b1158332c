//! Criterion 10: with zero noise, unit channels, zero phase error, and
//! uniform weights, every scheme's training trajectory matches the
//! error-free orthogonal reference to 1e-7 relative error per round. The
//! fully blind estimator's interference terms cancel only across
//! independent channel rows, so its exact-collapse case is a single device.

use airfl_core::channel::{ChannelModel, NoiseConfig};
use airfl_core::learning::{
    generate_synthetic_task, run_federated_training, LossKind, LrSchedule, TrainingConfig,
    TrainingOutput, WirelessConfig,
};
use airfl_core::numerics::RngStream;
use airfl_core::schemes::{SchemeConfig, WafelWeightRule};

use crate::support::verdict;

fn noiseless_wireless() -> WirelessConfig {
    WirelessConfig {
        channel: ChannelModel::Unit,
        antennas: 1,
        noise: NoiseConfig::awgn(0.0),
        power: 1.0,
        phase_error_bound: 0.0,
    }
}

fn max_relative_gap(a: &TrainingOutput, b: &TrainingOutput) -> f64 {
    a.trajectory
        .iter()
        .zip(&b.trajectory)
        .map(|(x, y)| x.distance(y) / x.norm().max(1e-12))
        .fold(0.0, f64::max)
}

#[test]
fn criterion_10_noiseless_collapse() {
    let stream = RngStream::new(0xAC10);
    let task = generate_synthetic_task(
        stream.substream(0),
        8,
        4,
        6,
        24,
        2,
        LossKind::Logistic,
        200,
    )
    .unwrap();
    let wireless = noiseless_wireless();
    let cfg = TrainingConfig {
        lr: LrSchedule::Constant(0.1),
        local_steps: 2,
        rounds: 15,
        batch: 8,
    };
    let run_stream = stream.substream(1);
    let ideal = run_federated_training(
        &task,
        &SchemeConfig::IdealOrthogonal,
        &wireless,
        &cfg,
        None,
        run_stream,
    )
    .unwrap();

    let schemes = [
        SchemeConfig::LocalCsit {
            truncation_threshold: 0.5,
        },
        SchemeConfig::GlobalCsit {
            selection_threshold: 2.0,
        },
        SchemeConfig::PartialPhaseBlind,
        SchemeConfig::Wafel {
            mse_budget: 1.0,
            weight_rule: WafelWeightRule::Uniform,
            heterogeneous: false,
        },
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for scheme in &schemes {
        let out = run_federated_training(&task, scheme, &wireless, &cfg, None, run_stream)
            .unwrap();
        let gap = max_relative_gap(&ideal, &out);
        pass &= gap < 1e-7;
        details.push(format!("{} {gap:.2e}", scheme.id()));
    }

    // fully blind at K = 1
    let single = generate_synthetic_task(
        stream.substream(2),
        1,
        4,
        6,
        24,
        2,
        LossKind::Logistic,
        200,
    )
    .unwrap();
    let blind_stream = stream.substream(3);
    let ideal_single = run_federated_training(
        &single,
        &SchemeConfig::IdealOrthogonal,
        &wireless,
        &cfg,
        None,
        blind_stream,
    )
    .unwrap();
    let blind = run_federated_training(
        &single,
        &SchemeConfig::FullyBlind,
        &wireless,
        &cfg,
        None,
        blind_stream,
    )
    .unwrap();
    let gap = max_relative_gap(&ideal_single, &blind);
    pass &= gap < 1e-7;
    details.push(format!("fully_blind(K=1) {gap:.2e}"));

    let detail = format!(
        "max per-round relative gap to the orthogonal reference: {}",
        details.join(", ")
    );
    verdict(10, "noiseless collapse", pass, &detail);
    assert!(pass, "{detail}");
}
