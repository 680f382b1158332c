//! Criterion 4: the fully blind estimator's mean aggregation error shrinks
//! by roughly 2x per quadrupling of the antenna count (the 1/sqrt(M) law),
//! measured at M in {256, 1024, 4096} over 200 trials each.

use airfl_core::channel::{draw_rayleigh, draw_round_noise, CsiView, NoiseConfig};
use airfl_core::learning::ModelVector;
use airfl_core::numerics::RngStream;
use airfl_core::schemes::{fully_blind_aggregate, AggregationInput};

use crate::support::{fl_like_models, subset_mean, verdict};

#[test]
fn criterion_04_blind_inverse_sqrt_antennas() {
    let root = RngStream::new(0xAC04);
    let k = 10;
    let dim = 32;
    let trials = 200;
    let models = fl_like_models(root.substream(0), k, dim, 0.5);
    let target = subset_mean(&models, &(0..k).collect::<Vec<_>>());
    let prev = ModelVector::zeros(dim);
    let noise_cfg = NoiseConfig::awgn(1.0);

    let mut means = Vec::new();
    for (level, &m) in [256usize, 1024, 4096].iter().enumerate() {
        let mut acc = 0.0;
        for t in 0..trials {
            let sub = root.substream(1 + level as u64).substream(t as u64);
            let channel = draw_rayleigh(sub.substream(0), k, m, 1.0).unwrap();
            let noise = draw_round_noise(sub.substream(1), dim, m, &noise_cfg).unwrap();
            let input = AggregationInput {
                local_models: &models,
                channel: &channel,
                csi: &CsiView::CsirOnly,
                noise: &noise,
                power_budget: 10.0,
                noise_variance: 1.0,
            };
            let out = fully_blind_aggregate(&input, &prev).unwrap();
            acc += out.global_model.distance(&target);
        }
        means.push(acc / trials as f64);
    }

    let ratio_a = means[0] / means[1];
    let ratio_b = means[1] / means[2];
    let pass = (1.5..=2.5).contains(&ratio_a) && (1.5..=2.5).contains(&ratio_b);
    let detail = format!(
        "mean errors {:.4} / {:.4} / {:.4}; per-4x ratios {ratio_a:.2}, {ratio_b:.2} (band [1.5, 2.5])",
        means[0], means[1], means[2]
    );
    verdict(4, "blind 1/sqrt(M) scaling", pass, &detail);
    assert!(pass, "{detail}");
}
