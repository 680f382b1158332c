//! Criterion 12: analytic gradients of the three loss families agree with
//! central finite differences (step 1e-5) to relative error 1e-5 at fifty
//! random points.

use rand::Rng;

use airfl_core::learning::{generate_synthetic_task, local_sgd, LossKind};
use airfl_core::numerics::RngStream;

use crate::support::verdict;

/// Directional-derivative check: analytic gradient dotted with a random
/// direction against the centered difference of the loss. Exercises every
/// coordinate through fifty random (point, direction) pairs per family.
#[test]
fn criterion_12_gradient_checks() {
    let root = RngStream::new(0xAC12);
    let kinds = [
        LossKind::LeastSquares,
        LossKind::Logistic,
        LossKind::Perceptron { hidden: 5 },
    ];
    let points_per_kind = [17usize, 17, 16]; // 50 total
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    let mut pass = true;

    for (kind_idx, (&kind, &points)) in kinds.iter().zip(&points_per_kind).enumerate() {
        let task = generate_synthetic_task(
            root.substream(kind_idx as u64),
            3,
            4,
            5,
            12,
            2,
            kind,
            10,
        )
        .unwrap();
        for p in 0..points {
            let point_stream = root.substream(100 + p as u64).substream(kind_idx as u64);
            let mut rng = point_stream.rng();
            let mut model = task.init_model(point_stream);
            for w in model.as_mut_slice() {
                *w += rng.gen_range(-0.8..0.8);
            }
            let grad = task.global_gradient(&model).unwrap();
            // random unit direction
            let mut dir: Vec<f64> = (0..model.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm: f64 = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
            dir.iter_mut().for_each(|d| *d /= norm);

            let mut plus = model.clone();
            let mut minus = model.clone();
            for ((wp, wm), d) in plus
                .as_mut_slice()
                .iter_mut()
                .zip(minus.as_mut_slice())
                .zip(&dir)
            {
                *wp += step * d;
                *wm -= step * d;
            }
            let numeric = (task.global_loss(&plus).unwrap() - task.global_loss(&minus).unwrap())
                / (2.0 * step);
            let analytic: f64 = grad.as_slice().iter().zip(&dir).map(|(g, d)| g * d).sum();
            let denom = numeric.abs().max(analytic.abs()).max(grad.norm());
            let rel = (numeric - analytic).abs() / denom;
            worst = worst.max(rel);
            pass &= rel <= 1e-5;
        }
    }

    // the SGD step consumes those gradients; spot-check one full-batch step
    let task = generate_synthetic_task(
        root.substream(999),
        2,
        3,
        4,
        10,
        2,
        LossKind::LeastSquares,
        10,
    )
    .unwrap();
    let model = task.init_model(root.substream(1000));
    let stepped = local_sgd(
        &model,
        &task.devices[0],
        task.loss,
        0.01,
        1,
        task.devices[0].len(),
        root.substream(1001),
    )
    .unwrap();
    pass &= stepped.distance(&model) > 0.0;

    let detail = format!("50 random points across three loss families; worst relative error {worst:.2e} (cap 1e-5)");
    verdict(12, "gradient checks", pass, &detail);
    assert!(pass, "{detail}");
}
