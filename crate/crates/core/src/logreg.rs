//! Multinomial logistic regression trained by full-batch gradient descent.
//!
//! The objective is the mean cross-entropy plus a penalty on the weights
//! (never the biases), scaled like scikit-learn's `C = 1 / reg_strength`:
//!
//! * L2: `mean_ce + reg_strength / (2N) * ||W||^2`
//! * L1: `mean_ce + reg_strength / N * ||W||_1`, optimized by proximal steps.
//!
//! Every accepted step must not increase the objective; the step size is
//! halved until it does not. Training is fully deterministic.

use serde::{Deserialize, Serialize};

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};

const PROB_CLIP: f64 = 1e-15;
const STD_FLOOR: f64 = 1e-12;
const MAX_STEP_GROWTH: f64 = 16.0;
const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L2,
    L1,
}

impl std::fmt::Display for Penalty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Penalty::L2 => write!(f, "l2"),
            Penalty::L1 => write!(f, "l1"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub penalty: Penalty,
    /// Inverse of scikit-learn's `C`.
    pub reg_strength: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub initial_step: f64,
    /// Standardize columns with training mean/std before fitting.
    pub standardize: bool,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            penalty: Penalty::L2,
            reg_strength: 1.0,
            max_iter: 200,
            tol: 1e-6,
            initial_step: 1.0,
            standardize: true,
        }
    }
}

/// Per-column affine rescaling learned on training features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &DistanceMatrix) -> Standardizer {
        let n = x.n_rows().max(1) as f64;
        let k = x.n_cols();
        let mut mean = vec![0.0; k];
        for row in x.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; k];
        for row in x.rows() {
            for ((acc, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        let scale = var.iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
        Standardizer { mean, scale }
    }

    pub fn transform_row(&self, row: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            row.iter()
                .zip(&self.mean)
                .zip(&self.scale)
                .map(|((v, m), s)| (v - m) / s),
        );
    }

    pub fn transform(&self, x: &DistanceMatrix) -> DistanceMatrix {
        let mut data = Vec::with_capacity(x.n_rows() * x.n_cols());
        let mut buf = Vec::new();
        for row in x.rows() {
            self.transform_row(row, &mut buf);
            data.extend_from_slice(&buf);
        }
        DistanceMatrix::from_flat(x.n_rows(), x.n_cols(), data).expect("same shape")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub n_classes: usize,
    pub n_features: usize,
    /// Row-major `n_classes x n_features`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub scaler: Option<Standardizer>,
    pub iterations: usize,
    pub final_loss: f64,
}

impl LogRegModel {
    /// The all-zero model, predicting the uniform distribution.
    pub fn zeros(n_classes: usize, n_features: usize) -> LogRegModel {
        LogRegModel {
            n_classes,
            n_features,
            weights: vec![0.0; n_classes * n_features],
            bias: vec![0.0; n_classes],
            scaler: None,
            iterations: 0,
            final_loss: f64::NAN,
        }
    }

    pub fn weight(&self, class: usize, feature: usize) -> f64 {
        self.weights[class * self.n_features + feature]
    }

    pub fn predict_proba(&self, x: &DistanceMatrix) -> Result<Vec<Vec<f64>>> {
        predict_proba(self, x)
    }

    pub fn predict(&self, x: &DistanceMatrix) -> Result<Vec<usize>> {
        Ok(self.predict_proba(x)?.iter().map(|p| argmax(p)).collect())
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax of `logits`, written into place.
fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        sum += *z;
    }
    for z in logits.iter_mut() {
        *z /= sum;
    }
}

fn logits_into(theta: &[f64], n_classes: usize, row: &[f64], out: &mut [f64]) {
    let k = row.len();
    let bias = &theta[n_classes * k..];
    for c in 0..n_classes {
        let w = &theta[c * k..(c + 1) * k];
        let mut z = bias[c];
        for (a, b) in w.iter().zip(row) {
            z += a * b;
        }
        out[c] = z;
    }
}

/// Smooth part of the objective (mean cross-entropy plus the L2 term when
/// `l2 > 0`) and, if requested, its gradient with respect to
/// `theta = [W row-major, b]`.
pub fn objective_and_gradient(
    theta: &[f64],
    x: &DistanceMatrix,
    y: &[usize],
    n_classes: usize,
    l2: f64,
    grad: Option<&mut [f64]>,
) -> f64 {
    let n = x.n_rows();
    let k = x.n_cols();
    let nf = n as f64;
    let mut probs = vec![0.0; n_classes];
    let mut loss = 0.0;
    let mut grad = grad;
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    for (row, &label) in x.rows().zip(y) {
        logits_into(theta, n_classes, row, &mut probs);
        // log-sum-exp for the loss, softmax for the gradient
        let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + probs.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        loss += lse - probs[label];
        if let Some(g) = grad.as_deref_mut() {
            softmax_in_place(&mut probs);
            for c in 0..n_classes {
                let residual = probs[c] - if c == label { 1.0 } else { 0.0 };
                let gw = &mut g[c * k..(c + 1) * k];
                for (gv, xv) in gw.iter_mut().zip(row) {
                    *gv += residual * xv;
                }
                g[n_classes * k + c] += residual;
            }
        }
    }
    loss /= nf;
    let n_weights = n_classes * k;
    if l2 > 0.0 {
        let sq: f64 = theta[..n_weights].iter().map(|w| w * w).sum();
        loss += l2 / (2.0 * nf) * sq;
    }
    if let Some(g) = grad {
        g.iter_mut().for_each(|v| *v /= nf);
        if l2 > 0.0 {
            for (gv, w) in g[..n_weights].iter_mut().zip(&theta[..n_weights]) {
                *gv += l2 / nf * w;
            }
        }
    }
    loss
}

fn l1_term(theta: &[f64], n_weights: usize, strength: f64, n: f64) -> f64 {
    strength / n * theta[..n_weights].iter().map(|w| w.abs()).sum::<f64>()
}

fn validate_labels(y: &[usize], n_rows: usize, n_classes: usize) -> Result<()> {
    if y.len() != n_rows {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for {} rows",
            y.len(),
            n_rows
        )));
    }
    if let Some(bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::ShapeMismatch(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }
    let first = y.first().copied();
    if n_rows == 0 || y.iter().all(|&c| Some(c) == first) {
        return Err(Error::DegenerateInput(
            "training labels contain fewer than two classes".into(),
        ));
    }
    Ok(())
}

/// Fits a softmax model with `n_classes` outputs from zero-initialized
/// parameters.
pub fn train_logreg(
    x: &DistanceMatrix,
    y: &[usize],
    n_classes: usize,
    params: &LogRegParams,
) -> Result<LogRegModel> {
    validate_labels(y, x.n_rows(), n_classes)?;
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite feature value".into()));
    }
    let scaler = params.standardize.then(|| Standardizer::fit(x));
    let scaled;
    let features = match &scaler {
        Some(s) => {
            scaled = s.transform(x);
            &scaled
        }
        None => x,
    };

    let k = x.n_cols();
    let n = x.n_rows() as f64;
    let n_weights = n_classes * k;
    let dim = n_weights + n_classes;
    let (l2, l1) = match params.penalty {
        Penalty::L2 => (params.reg_strength, 0.0),
        Penalty::L1 => (0.0, params.reg_strength),
    };

    let mut theta = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut smooth = objective_and_gradient(&theta, features, y, n_classes, l2, Some(&mut grad));
    let mut total = smooth + l1_term(&theta, n_weights, l1, n);
    let mut step = params.initial_step;
    let max_step = params.initial_step * MAX_STEP_GROWTH;
    let mut candidate = vec![0.0; dim];
    let mut iterations = 0;

    'outer: while iterations < params.max_iter {
        let (cand_smooth, cand_total) = loop {
            for i in 0..dim {
                candidate[i] = theta[i] - step * grad[i];
            }
            if l1 > 0.0 {
                let thresh = step * l1 / n;
                for w in &mut candidate[..n_weights] {
                    *w = w.signum() * (w.abs() - thresh).max(0.0);
                }
            }
            let cs = objective_and_gradient(&candidate, features, y, n_classes, l2, None);
            let ct = cs + l1_term(&candidate, n_weights, l1, n);
            if ct <= total {
                break (cs, ct);
            }
            step *= 0.5;
            if step < MIN_STEP {
                break 'outer;
            }
        };
        iterations += 1;
        let decrease = total - cand_total;
        std::mem::swap(&mut theta, &mut candidate);
        smooth = cand_smooth;
        total = cand_total;
        if decrease < params.tol {
            break;
        }
        objective_and_gradient(&theta, features, y, n_classes, l2, Some(&mut grad));
        step = (step * 2.0).min(max_step);
    }
    let _ = smooth;

    let bias = theta.split_off(n_weights);
    Ok(LogRegModel {
        n_classes,
        n_features: k,
        weights: theta,
        bias,
        scaler,
        iterations,
        final_loss: total,
    })
}

/// Class probabilities for each row; every row sums to one.
pub fn predict_proba(model: &LogRegModel, x: &DistanceMatrix) -> Result<Vec<Vec<f64>>> {
    if x.n_cols() != model.n_features {
        return Err(Error::ShapeMismatch(format!(
            "model expects {} features, got {}",
            model.n_features,
            x.n_cols()
        )));
    }
    let mut theta = model.weights.clone();
    theta.extend_from_slice(&model.bias);
    let mut buf = Vec::new();
    let mut out = Vec::with_capacity(x.n_rows());
    for row in x.rows() {
        let row = match &model.scaler {
            Some(s) => {
                s.transform_row(row, &mut buf);
                buf.as_slice()
            }
            None => row,
        };
        let mut p = vec![0.0; model.n_classes];
        logits_into(&theta, model.n_classes, row, &mut p);
        softmax_in_place(&mut p);
        out.push(p);
    }
    Ok(out)
}

/// Mean negative log-likelihood of the true class, probabilities clipped
/// to `[1e-15, 1 - 1e-15]`.
pub fn log_loss(proba: &[Vec<f64>], y: &[usize]) -> Result<f64> {
    if proba.len() != y.len() || proba.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} probability rows for {} labels",
            proba.len(),
            y.len()
        )));
    }
    let mut total = 0.0;
    for (p, &label) in proba.iter().zip(y) {
        let q = *p.get(label).ok_or_else(|| {
            Error::ShapeMismatch(format!("label {label} outside {} classes", p.len()))
        })?;
        total -= q.clamp(PROB_CLIP, 1.0 - PROB_CLIP).ln();
    }
    Ok(total / y.len() as f64)
}

pub fn accuracy(predicted: &[usize], y: &[usize]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(y).filter(|(a, b)| a == b).count();
    hits as f64 / y.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn column(values: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_rows(values.iter().map(|&v| vec![v]).collect()).unwrap()
    }

    #[test]
    fn separable_one_feature_reaches_full_accuracy() {
        let mut xs = vec![0.0; 10];
        xs.extend(vec![10.0; 10]);
        let y: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let x = column(&xs);
        let model = train_logreg(&x, &y, 2, &LogRegParams::default()).unwrap();
        assert_eq!(accuracy(&model.predict(&x).unwrap(), &y), 1.0);
    }

    #[test]
    fn zero_model_loss_is_ln_c() {
        let x = DistanceMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![0.5, 0.1]]).unwrap();
        let theta = vec![0.0; 3 * 2 + 3];
        let loss = objective_and_gradient(&theta, &x, &[0, 1, 2], 3, 1.0, None);
        assert_abs_diff_eq!(loss, 3f64.ln(), epsilon = 1e-12);
        let p = predict_proba(&LogRegModel::zeros(3, 2), &x).unwrap();
        for row in &p {
            for &v in row {
                assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(log_loss(&p, &[0, 1, 2]).unwrap(), 3f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let x = DistanceMatrix::from_rows(rows).unwrap();
        let y = [0, 1, 2, 1, 0];
        let theta: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut grad = vec![0.0; 12];
        objective_and_gradient(&theta, &x, &y, 3, 0.7, Some(&mut grad));
        let h = 1e-6;
        for i in 0..theta.len() {
            let mut plus = theta.clone();
            plus[i] += h;
            let mut minus = theta.clone();
            minus[i] -= h;
            let fd = (objective_and_gradient(&plus, &x, &y, 3, 0.7, None)
                - objective_and_gradient(&minus, &x, &y, 3, 0.7, None))
                / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-5, "component {i}: {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn single_class_is_degenerate() {
        let x = column(&[0.0, 1.0, 2.0]);
        assert!(matches!(
            train_logreg(&x, &[1, 1, 1], 2, &LogRegParams::default()),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn loss_trace_is_monotone_across_iteration_budgets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..4).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let y: Vec<usize> = rows.iter().map(|r| usize::from(r[0] + 0.3 * r[1] > 0.0)).collect();
        let x = DistanceMatrix::from_rows(rows).unwrap();
        for penalty in [Penalty::L2, Penalty::L1] {
            let mut last = f64::INFINITY;
            for iters in [1, 2, 5, 10, 40, 200] {
                let params = LogRegParams { penalty, max_iter: iters, tol: 0.0, ..Default::default() };
                let m = train_logreg(&x, &y, 2, &params).unwrap();
                assert!(m.final_loss <= last, "{penalty}: {} > {last}", m.final_loss);
                last = m.final_loss;
            }
        }
    }

    #[test]
    fn strong_l1_zeroes_weights() {
        let x = DistanceMatrix::from_rows((0..10).map(|i| vec![i as f64, (i * 7 % 3) as f64]).collect()).unwrap();
        let y: Vec<usize> = (0..10).map(|i| usize::from(i >= 5)).collect();
        let params = LogRegParams { penalty: Penalty::L1, reg_strength: 1000.0, ..Default::default() };
        let m = train_logreg(&x, &y, 2, &params).unwrap();
        assert!(m.weights.iter().all(|&w| w == 0.0), "{:?}", m.weights);
    }

    #[test]
    fn proba_rows_sum_to_one_and_saturate() {
        let mut m = LogRegModel::zeros(3, 1);
        m.weights = vec![0.0, 50.0, 0.0];
        let x = column(&[0.0, 1.0, 10.0]);
        let p = predict_proba(&m, &x).unwrap();
        for row in &p {
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
            assert!(row.iter().all(|&v| v > 0.0 && v < 1.0 || v == 1.0));
        }
        assert!(p[2][1] > 1.0 - 1e-12);
    }

    #[test]
    fn log_loss_hand_values() {
        assert!(log_loss(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0, 1]).unwrap() <= 1e-14);
        assert_abs_diff_eq!(log_loss(&[vec![0.8, 0.2]], &[0]).unwrap(), -(0.8f64.ln()), epsilon = 1e-15);
        assert_abs_diff_eq!(log_loss(&[vec![0.8, 0.2]], &[0]).unwrap(), 0.2231, epsilon = 1e-4);
        assert!(matches!(log_loss(&[vec![0.5, 0.5]], &[0, 1]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn predict_rejects_wrong_width() {
        let m = LogRegModel::zeros(2, 3);
        assert!(matches!(m.predict_proba(&column(&[1.0])), Err(Error::ShapeMismatch(_))));
    }
}
