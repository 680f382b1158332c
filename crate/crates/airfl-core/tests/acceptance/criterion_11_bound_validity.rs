//! Criterion 11: on the convex quadratic task, with the smoothness constant
//! taken from the Hessian and the gradient-variance constant sampled along
//! the actual trajectory, the empirical running average of squared global
//! gradient norms never exceeds the evaluated convergence bound of the
//! centralized-CSIT and weighted schemes, across ten seeds.

use airfl_core::channel::{ChannelModel, NoiseConfig};
use airfl_core::learning::{
    eval_convergence_bound, generate_synthetic_task, least_squares_optimum,
    measure_gradient_variance, measure_smoothness, run_federated_training, BoundConstants,
    LossKind, LrSchedule, PerRound, TrainingConfig, WirelessConfig,
};
use airfl_core::numerics::RngStream;
use airfl_core::schemes::{SchemeConfig, WafelWeightRule};

use crate::support::verdict;

#[test]
fn criterion_11_bound_validity() {
    let seeds: Vec<u64> = (0..10).map(|i| 1100 + i).collect();
    let mut pass = true;
    let mut worst_margin = f64::INFINITY; // bound / empirical, want >= 1
    for &seed in &seeds {
        let stream = RngStream::new(seed);
        let task = generate_synthetic_task(
            stream.substream(0),
            10,
            3,
            5,
            30,
            2,
            LossKind::LeastSquares,
            50,
        )
        .unwrap();
        let smoothness = measure_smoothness(&task).unwrap();
        let tau = 2usize;
        // a step size comfortably inside the bound's precondition
        let mu = 0.2 / (smoothness * tau as f64);
        let training = TrainingConfig {
            lr: LrSchedule::Constant(mu),
            local_steps: tau,
            rounds: 30,
            batch: 8,
        };
        let wireless = WirelessConfig {
            channel: ChannelModel::Rayleigh { sigma_h2: 1.0 },
            antennas: 1,
            noise: NoiseConfig::awgn(1.0),
            power: 10.0,
            phase_error_bound: std::f64::consts::FRAC_PI_4,
        };
        let run_stream = stream.substream(1);
        let (_, loss_optimal) = least_squares_optimum(&task).unwrap();

        for scheme in [
            SchemeConfig::GlobalCsit {
                selection_threshold: 20.0,
            },
            SchemeConfig::Wafel {
                mse_budget: 0.05,
                weight_rule: WafelWeightRule::Optimized,
                heterogeneous: false,
            },
        ] {
            let out = run_federated_training(
                &task, &scheme, &wireless, &training, None, run_stream,
            )
            .unwrap();
            let empirical = out
                .rounds
                .iter()
                .map(|r| r.global_grad_norm_sq)
                .sum::<f64>()
                / out.rounds.len() as f64;
            let loss_initial = task.global_loss(&out.trajectory[0]).unwrap();
            // gradient variance sampled on the trajectory the run visited
            let probes: Vec<_> = out.trajectory.iter().step_by(5).cloned().collect();
            let gradient_variance = measure_gradient_variance(
                &task,
                &probes,
                training.batch,
                100,
                stream.substream(2),
            )
            .unwrap();
            let constants = BoundConstants {
                smoothness,
                gradient_variance,
                ..BoundConstants::default()
            };
            let per_round = match &scheme {
                SchemeConfig::GlobalCsit { .. } => PerRound::GlobalCsit(
                    out.rounds
                        .iter()
                        .map(|r| (r.predicted_mse.unwrap(), r.active_set_size))
                        .collect(),
                ),
                SchemeConfig::Wafel { .. } => PerRound::Wafel(
                    out.rounds
                        .iter()
                        .map(|r| (r.predicted_mse.unwrap(), r.weight_norm * r.weight_norm))
                        .collect(),
                ),
                _ => unreachable!(),
            };
            let bound = eval_convergence_bound(
                &per_round,
                &constants,
                &training,
                loss_initial,
                loss_optimal,
            )
            .unwrap()
            .scalar()
            .unwrap();
            let margin = bound / empirical;
            worst_margin = worst_margin.min(margin);
            pass &= empirical <= bound;
        }
    }
    let detail = format!(
        "10 seeds x 2 schemes; smallest bound/empirical ratio {worst_margin:.2} (must stay >= 1)"
    );
    verdict(11, "convergence-bound validity", pass, &detail);
    assert!(pass, "{detail}");
}
