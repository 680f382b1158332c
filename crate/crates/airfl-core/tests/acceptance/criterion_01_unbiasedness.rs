//! Criterion 1: with channels and models fixed, the mean estimate over 1e4
//! independent noise draws stays within 2% relative distance of each
//! scheme's intended aggregate.

use airfl_core::channel::{
    draw_rayleigh, draw_round_noise, make_partial_phase_view, CsiView, NoiseConfig,
};
use airfl_core::learning::ModelVector;
use airfl_core::numerics::{empirical_mean_and_mse, RngStream};
use airfl_core::optim::{mp_greedy_selection, solve_weight_selection};
use airfl_core::schemes::{
    global_csit_aggregate, local_csit_aggregate, normalization_stats,
    stacked_compensated_channel, wafel_aggregate, wafel_weight_problem, AggregationInput,
};

use crate::support::{fl_like_models, subset_mean, verdict};

const DRAWS: usize = 10_000;
const TOLERANCE: f64 = 0.02;
const POWER: f64 = 10.0;
const SIGMA_Z2: f64 = 1.0;

struct Fixture {
    models: Vec<ModelVector>,
    dim: usize,
}

fn fixture(stream: RngStream) -> Fixture {
    let dim = 32;
    // one round's worth of similar device models
    let models = fl_like_models(stream, 8, dim, 0.05);
    Fixture { models, dim }
}

fn relative_bias(estimates: &[ModelVector], target: &ModelVector) -> f64 {
    let (bias_norm, _) = empirical_mean_and_mse(estimates, target).unwrap();
    bias_norm / target.norm()
}

#[test]
fn criterion_01_unbiasedness() {
    let root = RngStream::new(0xAC01);
    let fx = fixture(root.substream(0));
    let prev = ModelVector::zeros(fx.dim);
    let mut details = Vec::new();
    let mut pass = true;

    // local CSIT
    {
        let channel = draw_rayleigh(root.substream(1), 8, 1, 1.0).unwrap();
        let theta = 0.5;
        let mut estimates = Vec::with_capacity(DRAWS);
        let mut active = Vec::new();
        for t in 0..DRAWS {
            let noise = draw_round_noise(
                root.substream(2).substream(t as u64),
                fx.dim,
                1,
                &NoiseConfig::awgn(SIGMA_Z2),
            )
            .unwrap();
            let input = AggregationInput {
                local_models: &fx.models,
                channel: &channel,
                csi: &CsiView::LocalCsit,
                noise: &noise,
                power_budget: POWER,
                noise_variance: SIGMA_Z2,
            };
            let out = local_csit_aggregate(&input, theta, &prev).unwrap();
            active = out.active_set.clone();
            estimates.push(out.global_model);
        }
        assert!(!active.is_empty(), "fixture channel must admit devices");
        let target = subset_mean(&fx.models, &active);
        let bias = relative_bias(&estimates, &target);
        pass &= bias <= TOLERANCE;
        details.push(format!("local_csit {bias:.2e}"));
    }

    // global CSIT
    {
        let channel = draw_rayleigh(root.substream(3), 8, 2, 1.0).unwrap();
        let selection = mp_greedy_selection(&channel, POWER, SIGMA_Z2, 4.0).unwrap();
        assert!(!selection.is_empty());
        let mut estimates = Vec::with_capacity(DRAWS);
        for t in 0..DRAWS {
            let noise = draw_round_noise(
                root.substream(4).substream(t as u64),
                fx.dim,
                2,
                &NoiseConfig::awgn(SIGMA_Z2),
            )
            .unwrap();
            let input = AggregationInput {
                local_models: &fx.models,
                channel: &channel,
                csi: &CsiView::GlobalCsit,
                noise: &noise,
                power_budget: POWER,
                noise_variance: SIGMA_Z2,
            };
            let out = global_csit_aggregate(&input, &selection, &prev).unwrap();
            estimates.push(out.global_model);
        }
        let target = subset_mean(&fx.models, &selection.active);
        let bias = relative_bias(&estimates, &target);
        pass &= bias <= TOLERANCE;
        details.push(format!("global_csit {bias:.2e}"));
    }

    // weighted aggregation, with weights from the round's own solver
    {
        let channel = draw_rayleigh(root.substream(5), 8, 1, 1.0).unwrap();
        let view = make_partial_phase_view(
            root.substream(6),
            &channel,
            std::f64::consts::FRAC_PI_4,
        )
        .unwrap();
        let stats = normalization_stats(&fx.models);
        let sigma_bar = stats.sigma.iter().sum::<f64>() / stats.sigma.len() as f64;
        let h = stacked_compensated_channel(&channel, &view).unwrap();
        let problem = wafel_weight_problem(
            &vec![sigma_bar; 8],
            &h,
            POWER,
            SIGMA_Z2 / 2.0,
            sigma_bar * sigma_bar, // comfortably feasible budget
            vec![1.0; 8],
        )
        .unwrap();
        let alpha = solve_weight_selection(&problem).unwrap().alpha;
        let mut target = ModelVector::zeros(fx.dim);
        for (k, m) in fx.models.iter().enumerate() {
            target.add_scaled(m, alpha[k]);
        }
        let mut estimates = Vec::with_capacity(DRAWS);
        for t in 0..DRAWS {
            let noise = draw_round_noise(
                root.substream(7).substream(t as u64),
                fx.dim,
                1,
                &NoiseConfig::awgn(SIGMA_Z2),
            )
            .unwrap();
            let input = AggregationInput {
                local_models: &fx.models,
                channel: &channel,
                csi: &view,
                noise: &noise,
                power_budget: POWER,
                noise_variance: SIGMA_Z2,
            };
            let out = wafel_aggregate(&input, &alpha, &prev).unwrap();
            estimates.push(out.global_model);
        }
        let bias = relative_bias(&estimates, &target);
        pass &= bias <= TOLERANCE;
        details.push(format!("wafel {bias:.2e}"));
    }

    let detail = format!("relative bias over {DRAWS} draws: {}", details.join(", "));
    verdict(1, "unbiasedness", pass, &detail);
    assert!(pass, "{detail}");
}
