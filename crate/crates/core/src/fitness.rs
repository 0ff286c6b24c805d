//! Scoring shapelet sets and evaluating discovered sets on held-out data.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::distance::{distance_matrix, distance_matrix_sequential, DistanceMatrix, Shapelet};
use crate::error::{Error, Result};
use crate::logreg::{accuracy, log_loss, train_logreg, LogRegModel, LogRegParams, Penalty};

/// Errors closer than this compare as equal, so the complexity tie-break applies.
pub const ERROR_TOLERANCE: f64 = 1e-9;

/// Lower is better on both components; error dominates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub error: f64,
    /// Sum of shapelet lengths.
    pub complexity: usize,
}

impl Fitness {
    fn error_bucket(&self) -> i64 {
        (self.error / ERROR_TOLERANCE).round() as i64
    }

    /// True when `self` is strictly fitter than `other`.
    pub fn is_fitter_than(&self, other: &Fitness) -> bool {
        compare_fitness(self, other) == Ordering::Less
    }
}

/// Orders by error, then complexity. `Less` means `a` is fitter.
///
/// Errors are snapped to a grid of width [`ERROR_TOLERANCE`] before
/// comparison, which keeps the relation a total order (a plain
/// `|a - b| < tol` test is not transitive).
pub fn compare_fitness(a: &Fitness, b: &Fitness) -> Ordering {
    a.error_bucket()
        .cmp(&b.error_bucket())
        .then(a.complexity.cmp(&b.complexity))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMetric {
    #[default]
    LogLoss,
    /// Training misclassification rate.
    Misclassification,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessParams {
    pub metric: ErrorMetric,
    pub model: LogRegParams,
}

impl Default for FitnessParams {
    fn default() -> Self {
        FitnessParams {
            metric: ErrorMetric::LogLoss,
            model: LogRegParams::default(),
        }
    }
}

pub fn complexity(shapelets: &[Shapelet]) -> usize {
    shapelets.iter().map(Shapelet::len).sum()
}

/// Fitness of a precomputed distance matrix: fit the model on it and
/// measure the error on the same rows.
pub fn fitness_from_distances(
    d: &DistanceMatrix,
    dataset: &Dataset,
    complexity: usize,
    params: &FitnessParams,
) -> Result<Fitness> {
    let model = train_logreg(d, dataset.labels(), dataset.n_classes(), &params.model)?;
    let proba = model.predict_proba(d)?;
    let error = match params.metric {
        ErrorMetric::LogLoss => log_loss(&proba, dataset.labels())?,
        ErrorMetric::Misclassification => {
            let pred: Vec<usize> = proba.iter().map(|p| crate::logreg::argmax(p)).collect();
            1.0 - accuracy(&pred, dataset.labels())
        }
    };
    Ok(Fitness { error, complexity })
}

/// Transforms the training set with `shapelets` and scores the result.
/// Single-threaded; callers parallelize across candidate sets.
pub fn evaluate_fitness(shapelets: &[Shapelet], dataset: &Dataset, params: &FitnessParams) -> Result<Fitness> {
    if shapelets.is_empty() {
        return Err(Error::InvalidShapelet("empty shapelet set".into()));
    }
    let d = distance_matrix_sequential(shapelets, dataset.series())?;
    fitness_from_distances(&d, dataset, complexity(shapelets), params)
}

/// Inverse regularization strengths searched by [`tune_and_evaluate`].
pub const C_GRID: [f64; 7] = [0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0];
pub const PENALTY_GRID: [Penalty; 2] = [Penalty::L2, Penalty::L1];
pub const CV_FOLDS: usize = 3;
pub const DEFAULT_FOLD_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneOptions {
    pub fold_seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            fold_seed: DEFAULT_FOLD_SEED,
            max_iter: 500,
            tol: 1e-7,
        }
    }
}

/// Every (penalty, C) pair in search order.
pub fn tuning_grid() -> Vec<(Penalty, f64)> {
    PENALTY_GRID
        .iter()
        .flat_map(|&p| C_GRID.iter().map(move |&c| (p, c)))
        .collect()
}

/// Stratified fold index for every row: each class is shuffled and dealt
/// round-robin over the folds.
pub fn stratified_folds(labels: &[usize], n_classes: usize, n_folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            fold[i] = next % n_folds;
            next += 1;
        }
    }
    fold
}

fn lr_params(penalty: Penalty, c: f64, opts: &TuneOptions) -> LogRegParams {
    LogRegParams {
        penalty,
        reg_strength: 1.0 / c,
        max_iter: opts.max_iter,
        tol: opts.tol,
        initial_step: 1.0,
        standardize: true,
    }
}

/// Mean held-out log loss of a fixed model configuration over stratified folds.
pub fn cross_validated_log_loss(
    d: &DistanceMatrix,
    labels: &[usize],
    n_classes: usize,
    params: &LogRegParams,
    folds: &[usize],
    n_folds: usize,
) -> Result<f64> {
    let mut total = 0.0;
    let mut used = 0;
    for f in 0..n_folds {
        let train_idx: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] != f).collect();
        let test_idx: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] == f).collect();
        if test_idx.is_empty() {
            continue;
        }
        let y_train: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
        let y_test: Vec<usize> = test_idx.iter().map(|&i| labels[i]).collect();
        let model = train_logreg(&d.select_rows(&train_idx), &y_train, n_classes, params)?;
        let proba = model.predict_proba(&d.select_rows(&test_idx))?;
        total += log_loss(&proba, &y_test)?;
        used += 1;
    }
    if used == 0 {
        return Err(Error::DegenerateInput("no non-empty validation fold".into()));
    }
    Ok(total / used as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub accuracy: f64,
    pub penalty: Penalty,
    pub c: f64,
    pub cv_log_loss: f64,
    pub n_shapelets: usize,
    pub fold_seed: u64,
    pub per_class: Vec<ClassMetrics>,
    pub predictions: Vec<usize>,
    #[serde(skip)]
    pub model: Option<LogRegModel>,
}

pub fn per_class_metrics(predicted: &[usize], truth: &[usize], n_classes: usize) -> Vec<ClassMetrics> {
    (0..n_classes)
        .map(|c| {
            let tp = predicted.iter().zip(truth).filter(|&(&p, &t)| p == c && t == c).count();
            let predicted_c = predicted.iter().filter(|&&p| p == c).count();
            let support = truth.iter().filter(|&&t| t == c).count();
            let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
            ClassMetrics {
                class: c,
                precision: ratio(tp, predicted_c),
                recall: ratio(tp, support),
                support,
            }
        })
        .collect()
}

/// Grid-searches penalty type and strength by stratified 3-fold CV log loss
/// on the training distances, refits the winner on the full training set
/// and reports test accuracy. Ties keep the earlier grid entry.
pub fn tune_and_evaluate(
    shapelets: &[Shapelet],
    train: &Dataset,
    test: &Dataset,
    opts: &TuneOptions,
) -> Result<EvaluationReport> {
    if train.n_classes() != test.n_classes() {
        return Err(Error::IncompatibleDatasets(format!(
            "train has {} classes, test has {}",
            train.n_classes(),
            test.n_classes()
        )));
    }
    let d_train = distance_matrix(shapelets, train)?;
    let d_test = distance_matrix(shapelets, test)?;
    tune_and_evaluate_distances(&d_train, train.labels(), &d_test, test.labels(), train.n_classes(), opts)
}

pub fn tune_and_evaluate_distances(
    d_train: &DistanceMatrix,
    y_train: &[usize],
    d_test: &DistanceMatrix,
    y_test: &[usize],
    n_classes: usize,
    opts: &TuneOptions,
) -> Result<EvaluationReport> {
    let folds = stratified_folds(y_train, n_classes, CV_FOLDS, opts.fold_seed);
    let mut best: Option<(Penalty, f64, f64)> = None;
    for (penalty, c) in tuning_grid() {
        let params = lr_params(penalty, c, opts);
        let loss = cross_validated_log_loss(d_train, y_train, n_classes, &params, &folds, CV_FOLDS)?;
        if best.is_none_or(|(_, _, l)| loss < l) {
            best = Some((penalty, c, loss));
        }
    }
    let (penalty, c, cv_log_loss) = best.expect("grid is non-empty");
    let model = train_logreg(d_train, y_train, n_classes, &lr_params(penalty, c, opts))?;
    let predictions = model.predict(d_test)?;
    Ok(EvaluationReport {
        accuracy: accuracy(&predictions, y_test),
        penalty,
        c,
        cv_log_loss,
        n_shapelets: d_train.n_cols(),
        fold_seed: opts.fold_seed,
        per_class: per_class_metrics(&predictions, y_test, n_classes),
        predictions,
        model: Some(model),
    })
}
