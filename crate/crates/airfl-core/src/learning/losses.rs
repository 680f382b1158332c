//! Loss functions over flat parameter vectors.
//!
//! Three model families, all classification-shaped: linear least squares on
//! one-hot targets (convex quadratic, closed-form optimum), multinomial
//! logistic regression, and a one-hidden-layer tanh perceptron. Parameters
//! are flattened layer by layer, weights before biases; weights are stored
//! input-major (`w[input * outputs + output]`).

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::learning::model::ModelVector;
use crate::numerics::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    /// `1/2 ||W^T x + b - onehot(y)||^2`
    LeastSquares,
    /// Softmax cross-entropy on linear scores.
    Logistic,
    /// tanh hidden layer, softmax cross-entropy output.
    Perceptron { hidden: usize },
}

impl LossKind {
    pub fn model_dim(&self, feature_dim: usize, classes: usize) -> usize {
        match *self {
            LossKind::LeastSquares | LossKind::Logistic => (feature_dim + 1) * classes,
            LossKind::Perceptron { hidden } => {
                feature_dim * hidden + hidden + hidden * classes + classes
            }
        }
    }

    /// Initial global model: zeros for the linear families, symmetric
    /// uniform with scale `sqrt(6 / (fan_in + fan_out))` per layer for the
    /// perceptron.
    pub fn init_model(
        &self,
        feature_dim: usize,
        classes: usize,
        stream: RngStream,
    ) -> ModelVector {
        match *self {
            LossKind::LeastSquares | LossKind::Logistic => {
                ModelVector::zeros(self.model_dim(feature_dim, classes))
            }
            LossKind::Perceptron { hidden } => {
                let mut rng = stream.rng();
                let mut params = Vec::with_capacity(self.model_dim(feature_dim, classes));
                let a1 = (6.0 / (feature_dim + hidden) as f64).sqrt();
                for _ in 0..feature_dim * hidden {
                    params.push(rng.gen_range(-a1..a1));
                }
                params.extend(std::iter::repeat(0.0).take(hidden));
                let a2 = (6.0 / (hidden + classes) as f64).sqrt();
                for _ in 0..hidden * classes {
                    params.push(rng.gen_range(-a2..a2));
                }
                params.extend(std::iter::repeat(0.0).take(classes));
                ModelVector::from_vec(params).expect("finite init")
            }
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            LossKind::LeastSquares => "least_squares",
            LossKind::Logistic => "logistic",
            LossKind::Perceptron { .. } => "perceptron",
        }
    }
}

fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

/// Linear scores `W^T x + b` for the linear families.
fn linear_scores(model: &[f64], x: &[f64], classes: usize, out: &mut [f64]) {
    let d = x.len();
    let bias_base = d * classes;
    out.copy_from_slice(&model[bias_base..bias_base + classes]);
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let row = &model[j * classes..(j + 1) * classes];
        for (c, &w) in row.iter().enumerate() {
            out[c] += xj * w;
        }
    }
}

struct PerceptronDims {
    d: usize,
    h: usize,
    c: usize,
}

impl PerceptronDims {
    fn w1(&self) -> usize {
        0
    }
    fn b1(&self) -> usize {
        self.d * self.h
    }
    fn w2(&self) -> usize {
        self.d * self.h + self.h
    }
    fn b2(&self) -> usize {
        self.d * self.h + self.h + self.h * self.c
    }
}

fn perceptron_forward(
    model: &[f64],
    x: &[f64],
    dims: &PerceptronDims,
    hidden_out: &mut [f64],
    scores: &mut [f64],
) {
    let (w1, b1, w2, b2) = (dims.w1(), dims.b1(), dims.w2(), dims.b2());
    hidden_out.copy_from_slice(&model[b1..b1 + dims.h]);
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let row = &model[w1 + j * dims.h..w1 + (j + 1) * dims.h];
        for (u, &w) in row.iter().enumerate() {
            hidden_out[u] += xj * w;
        }
    }
    for v in hidden_out.iter_mut() {
        *v = v.tanh();
    }
    scores.copy_from_slice(&model[b2..b2 + dims.c]);
    for (u, &au) in hidden_out.iter().enumerate() {
        let row = &model[w2 + u * dims.c..w2 + (u + 1) * dims.c];
        for (c, &w) in row.iter().enumerate() {
            scores[c] += au * w;
        }
    }
}

/// Mean loss over the selected samples (all samples when `indices` is None).
pub(crate) fn loss_on(
    kind: LossKind,
    model: &ModelVector,
    features: &Array2<f64>,
    labels: &[usize],
    indices: Option<&[usize]>,
) -> f64 {
    let classes = match kind {
        LossKind::LeastSquares | LossKind::Logistic => {
            model.dim() / (features.ncols() + 1)
        }
        LossKind::Perceptron { hidden } => {
            (model.dim() - features.ncols() * hidden - hidden) / (hidden + 1)
        }
    };
    let params = model.as_slice();
    let mut scores = vec![0.0; classes];
    let mut hidden_buf = match kind {
        LossKind::Perceptron { hidden } => vec![0.0; hidden],
        _ => Vec::new(),
    };
    let dims = PerceptronDims {
        d: features.ncols(),
        h: hidden_buf.len(),
        c: classes,
    };
    let mut acc = 0.0;
    let mut count = 0usize;
    let mut eval = |i: usize| {
        let x = features.row(i);
        let x = x.as_slice().expect("contiguous row");
        match kind {
            LossKind::LeastSquares => {
                linear_scores(params, x, classes, &mut scores);
                let mut l = 0.0;
                for (c, &s) in scores.iter().enumerate() {
                    let t = if c == labels[i] { 1.0 } else { 0.0 };
                    l += (s - t) * (s - t);
                }
                acc += 0.5 * l;
            }
            LossKind::Logistic => {
                linear_scores(params, x, classes, &mut scores);
                softmax_in_place(&mut scores);
                acc += -(scores[labels[i]].max(1e-300)).ln();
            }
            LossKind::Perceptron { .. } => {
                perceptron_forward(params, x, &dims, &mut hidden_buf, &mut scores);
                softmax_in_place(&mut scores);
                acc += -(scores[labels[i]].max(1e-300)).ln();
            }
        }
        count += 1;
    };
    match indices {
        Some(idx) => idx.iter().for_each(|&i| eval(i)),
        None => (0..features.nrows()).for_each(&mut eval),
    }
    acc / count.max(1) as f64
}

/// Mean gradient over the selected samples, accumulated into a fresh vector.
pub(crate) fn gradient_on(
    kind: LossKind,
    model: &ModelVector,
    features: &Array2<f64>,
    labels: &[usize],
    indices: Option<&[usize]>,
) -> Vec<f64> {
    let d = features.ncols();
    let classes = match kind {
        LossKind::LeastSquares | LossKind::Logistic => model.dim() / (d + 1),
        LossKind::Perceptron { hidden } => (model.dim() - d * hidden - hidden) / (hidden + 1),
    };
    let params = model.as_slice();
    let mut grad = vec![0.0; model.dim()];
    let mut scores = vec![0.0; classes];
    let mut hidden_buf = match kind {
        LossKind::Perceptron { hidden } => vec![0.0; hidden],
        _ => Vec::new(),
    };
    let dims = PerceptronDims {
        d,
        h: hidden_buf.len(),
        c: classes,
    };
    let mut count = 0usize;
    let mut accumulate = |i: usize| {
        let x = features.row(i);
        let x = x.as_slice().expect("contiguous row");
        match kind {
            LossKind::LeastSquares | LossKind::Logistic => {
                linear_scores(params, x, classes, &mut scores);
                if matches!(kind, LossKind::Logistic) {
                    softmax_in_place(&mut scores);
                }
                // d loss / d scores
                scores[labels[i]] -= 1.0;
                let bias_base = d * classes;
                for (j, &xj) in x.iter().enumerate() {
                    if xj == 0.0 {
                        continue;
                    }
                    let row = &mut grad[j * classes..(j + 1) * classes];
                    for (c, &ds) in scores.iter().enumerate() {
                        row[c] += xj * ds;
                    }
                }
                for (c, &ds) in scores.iter().enumerate() {
                    grad[bias_base + c] += ds;
                }
            }
            LossKind::Perceptron { .. } => {
                perceptron_forward(params, x, &dims, &mut hidden_buf, &mut scores);
                softmax_in_place(&mut scores);
                scores[labels[i]] -= 1.0;
                let (w1, b1, w2, b2) = (dims.w1(), dims.b1(), dims.w2(), dims.b2());
                // output layer
                for (u, &au) in hidden_buf.iter().enumerate() {
                    let row = &mut grad[w2 + u * dims.c..w2 + (u + 1) * dims.c];
                    for (c, &ds) in scores.iter().enumerate() {
                        row[c] += au * ds;
                    }
                }
                for (c, &ds) in scores.iter().enumerate() {
                    grad[b2 + c] += ds;
                }
                // back through tanh
                for (u, &au) in hidden_buf.iter().enumerate() {
                    let wrow = &params[w2 + u * dims.c..w2 + (u + 1) * dims.c];
                    let da: f64 = wrow.iter().zip(scores.iter()).map(|(w, ds)| w * ds).sum();
                    let dz = da * (1.0 - au * au);
                    for (j, &xj) in x.iter().enumerate() {
                        if xj != 0.0 {
                            grad[w1 + j * dims.h + u] += xj * dz;
                        }
                    }
                    grad[b1 + u] += dz;
                }
            }
        }
        count += 1;
    };
    match indices {
        Some(idx) => idx.iter().for_each(|&i| accumulate(i)),
        None => (0..features.nrows()).for_each(&mut accumulate),
    }
    let inv = 1.0 / count.max(1) as f64;
    for g in grad.iter_mut() {
        *g *= inv;
    }
    grad
}

/// Fraction of samples whose argmax score matches the label.
pub(crate) fn accuracy_on(
    kind: LossKind,
    model: &ModelVector,
    features: &Array2<f64>,
    labels: &[usize],
) -> f64 {
    let d = features.ncols();
    let classes = match kind {
        LossKind::LeastSquares | LossKind::Logistic => model.dim() / (d + 1),
        LossKind::Perceptron { hidden } => (model.dim() - d * hidden - hidden) / (hidden + 1),
    };
    let params = model.as_slice();
    let mut scores = vec![0.0; classes];
    let mut hidden_buf = match kind {
        LossKind::Perceptron { hidden } => vec![0.0; hidden],
        _ => Vec::new(),
    };
    let dims = PerceptronDims {
        d,
        h: hidden_buf.len(),
        c: classes,
    };
    let mut correct = 0usize;
    for i in 0..features.nrows() {
        let x = features.row(i);
        let x = x.as_slice().expect("contiguous row");
        match kind {
            LossKind::LeastSquares | LossKind::Logistic => {
                linear_scores(params, x, classes, &mut scores)
            }
            LossKind::Perceptron { .. } => {
                perceptron_forward(params, x, &dims, &mut hidden_buf, &mut scores)
            }
        }
        let mut best = 0usize;
        for (c, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = c;
            }
        }
        if best == labels[i] {
            correct += 1;
        }
    }
    correct as f64 / features.nrows().max(1) as f64
}

/// Validate that a model vector fits the loss family for given data shape.
pub(crate) fn check_model_shape(
    kind: LossKind,
    model: &ModelVector,
    feature_dim: usize,
    classes: usize,
) -> Result<()> {
    let expected = kind.model_dim(feature_dim, classes);
    if model.dim() != expected {
        return Err(Error::DimensionMismatch(format!(
            "model has {} parameters, {} expects {expected}",
            model.dim(),
            kind.id()
        )));
    }
    Ok(())
}
