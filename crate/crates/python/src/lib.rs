//! Python bindings for shapevo.
//!
//! Long-running calls release the interpreter while they work, so other
//! Python threads keep running during an `evolve`.
//!
//! ```python
//! import shapevo_py as sv
//! train, test = sv.gen_imbalanced_threeclass(seed=0)
//! cfg = sv.GaConfig.defaults_for(train.min_len, seed=1)
//! result = sv.evolve(train, cfg)
//! print(sv.tune_and_evaluate(result.shapelets, train, test)["accuracy"])
//! ```

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shapevo::baseline;
use shapevo::dataset::{self, LabelPosition};
use shapevo::distance::{self, Shapelet};
use shapevo::evolution::{self, Operators};
use shapevo::fitness::{self, ErrorMetric, TuneOptions};
use shapevo::synth;

create_exception!(shapevo_py, ShapevoError, PyException);

fn to_py(err: shapevo::Error) -> PyErr {
    match err {
        shapevo::Error::Io { .. } => PyOSError::new_err(err.to_string()),
        shapevo::Error::InvalidConfig(_) => PyValueError::new_err(err.to_string()),
        _ => ShapevoError::new_err(err.to_string()),
    }
}

fn shapelets_from(values: Vec<Vec<f64>>) -> PyResult<Vec<Shapelet>> {
    values.into_iter().map(|v| Shapelet::new(v).map_err(to_py)).collect()
}

fn shapelets_to(shapelets: &[Shapelet]) -> Vec<Vec<f64>> {
    shapelets.iter().map(|s| s.values().to_vec()).collect()
}

/// A labeled collection of time series. Labels are class indices `0..n_classes`.
#[pyclass(frozen, skip_from_py_object, module = "shapevo_py")]
#[derive(Clone)]
struct Dataset {
    inner: dataset::Dataset,
}

#[pymethods]
impl Dataset {
    #[new]
    #[pyo3(signature = (rows, labels, n_classes=None))]
    fn new(rows: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: Option<usize>) -> PyResult<Self> {
        let n = n_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
        let inner = dataset::Dataset::from_rows(rows, labels, n).map_err(to_py)?;
        Ok(Dataset { inner })
    }

    /// Reads a delimited text file, one series per line.
    #[staticmethod]
    #[pyo3(signature = (path, delimiter=",", label_position="first"))]
    fn load(path: &str, delimiter: &str, label_position: &str) -> PyResult<Self> {
        let delim = shapevo::cli::parse_delimiter(delimiter).map_err(to_py)?;
        let pos: LabelPosition = label_position.parse().map_err(to_py)?;
        let inner = dataset::load_delimited(path, delim, pos).map_err(to_py)?;
        Ok(Dataset { inner })
    }

    /// Reads a train/test pair with one shared label mapping.
    #[staticmethod]
    #[pyo3(signature = (train, test, delimiter=",", label_position="first"))]
    fn load_pair(train: &str, test: &str, delimiter: &str, label_position: &str) -> PyResult<(Self, Self)> {
        let delim = shapevo::cli::parse_delimiter(delimiter).map_err(to_py)?;
        let pos: LabelPosition = label_position.parse().map_err(to_py)?;
        let (tr, te) = dataset::load_train_test(train, test, delim, pos).map_err(to_py)?;
        Ok((Dataset { inner: tr }, Dataset { inner: te }))
    }

    fn save(&self, path: &str) -> PyResult<()> {
        dataset::save_delimited(&self.inner, path, ',').map_err(to_py)
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    #[getter]
    fn min_len(&self) -> usize {
        self.inner.min_len()
    }

    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.inner.labels().to_vec()
    }

    fn series(&self) -> Vec<Vec<f64>> {
        self.inner.series().iter().map(|s| s.values().to_vec()).collect()
    }

    fn class_counts(&self) -> Vec<usize> {
        self.inner.class_counts()
    }

    fn z_normalized(&self) -> Self {
        Dataset {
            inner: self.inner.z_normalized(),
        }
    }

    /// SHA-256 of labels and values, as hex.
    fn content_hash(&self) -> String {
        self.inner.content_hash()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(n={}, n_classes={}, min_len={})",
            self.inner.len(),
            self.inner.n_classes(),
            self.inner.min_len()
        )
    }
}

/// Genetic algorithm settings. Use `GaConfig.defaults_for(min_len, seed)`
/// and adjust attributes as needed.
#[pyclass(skip_from_py_object, module = "shapevo_py", get_all, set_all)]
#[derive(Clone)]
struct GaConfig {
    population_size: usize,
    max_generations: usize,
    patience: usize,
    p_crossover: f64,
    p_mutation: f64,
    max_shapelets: usize,
    max_len: usize,
    tournament_size: usize,
    seed: u64,
    max_total_shapelets: Option<usize>,
    initializations: Vec<u8>,
    crossovers: Vec<u8>,
    mutations: Vec<u8>,
    /// "log_loss" or "misclassification"
    error_metric: String,
}

impl GaConfig {
    fn to_core(&self) -> PyResult<evolution::GaConfig> {
        let mut cfg = evolution::GaConfig::defaults_for(self.max_len, self.seed);
        cfg.population_size = self.population_size;
        cfg.max_generations = self.max_generations;
        cfg.patience = self.patience;
        cfg.p_crossover = self.p_crossover;
        cfg.p_mutation = self.p_mutation;
        cfg.max_shapelets = self.max_shapelets;
        cfg.max_len = self.max_len;
        cfg.tournament_size = self.tournament_size;
        cfg.max_total_shapelets = self.max_total_shapelets;
        cfg.operators = Operators::new(&self.initializations, &self.crossovers, &self.mutations).map_err(to_py)?;
        cfg.fitness.metric = match self.error_metric.as_str() {
            "log_loss" => ErrorMetric::LogLoss,
            "misclassification" => ErrorMetric::Misclassification,
            other => return Err(PyValueError::new_err(format!("unknown error_metric '{other}'"))),
        };
        Ok(cfg)
    }
}

#[pymethods]
impl GaConfig {
    #[staticmethod]
    fn defaults_for(min_len: usize, seed: u64) -> Self {
        let cfg = evolution::GaConfig::defaults_for(min_len, seed);
        GaConfig {
            population_size: cfg.population_size,
            max_generations: cfg.max_generations,
            patience: cfg.patience,
            p_crossover: cfg.p_crossover,
            p_mutation: cfg.p_mutation,
            max_shapelets: cfg.max_shapelets,
            max_len: cfg.max_len,
            tournament_size: cfg.tournament_size,
            seed: cfg.seed,
            max_total_shapelets: cfg.max_total_shapelets,
            initializations: cfg.operators.initializations,
            crossovers: cfg.operators.crossovers,
            mutations: cfg.operators.mutations,
            error_metric: "log_loss".into(),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "GaConfig(population_size={}, max_generations={}, patience={}, max_len={}, seed={})",
            self.population_size, self.max_generations, self.patience, self.max_len, self.seed
        )
    }
}

/// Outcome of a run: the fittest shapelet set and per-generation statistics.
#[pyclass(frozen, module = "shapevo_py", get_all)]
struct EvolveResult {
    shapelets: Vec<Vec<f64>>,
    error: f64,
    complexity: usize,
    /// CSV text with one row per generation
    runlog_csv: String,
    generations: usize,
}

impl EvolveResult {
    fn from_outcome(outcome: evolution::EvolveOutcome) -> Self {
        let fitness = outcome.best.fitness.expect("elite is evaluated");
        EvolveResult {
            shapelets: shapelets_to(&outcome.best.shapelets),
            error: fitness.error,
            complexity: fitness.complexity,
            runlog_csv: outcome.log.to_csv(),
            generations: outcome.log.len(),
        }
    }
}

#[pymethods]
impl EvolveResult {
    fn __repr__(&self) -> String {
        format!(
            "EvolveResult(n_shapelets={}, error={}, complexity={})",
            self.shapelets.len(),
            self.error,
            self.complexity
        )
    }
}

/// Evolves a shapelet set on `train`.
#[pyfunction]
fn evolve(py: Python<'_>, train: &Dataset, config: &GaConfig) -> PyResult<EvolveResult> {
    let cfg = config.to_core()?;
    let ds = train.inner.clone();
    let outcome = py.detach(move || evolution::evolve(&ds, &cfg)).map_err(to_py)?;
    Ok(EvolveResult::from_outcome(outcome))
}

/// Evolves a single shapelet (every individual holds exactly one).
#[pyfunction]
fn evolve_single(py: Python<'_>, train: &Dataset, config: &GaConfig) -> PyResult<EvolveResult> {
    let cfg = config.to_core()?;
    let ds = train.inner.clone();
    let (_, outcome) = py.detach(move || evolution::evolve_single(&ds, &cfg)).map_err(to_py)?;
    Ok(EvolveResult::from_outcome(outcome))
}

/// Length-normalized minimum sliding-window Euclidean distance.
#[pyfunction]
fn subsequence_distance(shapelet: Vec<f64>, series: Vec<f64>) -> PyResult<f64> {
    distance::subsequence_distance(&shapelet, &series).map_err(to_py)
}

/// N x K matrix of distances from every series to every shapelet.
#[pyfunction]
fn distance_matrix(py: Python<'_>, shapelets: Vec<Vec<f64>>, data: &Dataset) -> PyResult<Vec<Vec<f64>>> {
    let shapelets = shapelets_from(shapelets)?;
    let ds = data.inner.clone();
    let d = py.detach(move || distance::distance_matrix(&shapelets, &ds)).map_err(to_py)?;
    Ok(d.rows().map(<[f64]>::to_vec).collect())
}

#[pyfunction]
fn dtw_distance(a: Vec<f64>, b: Vec<f64>) -> f64 {
    distance::dtw_distance(&a, &b)
}

#[pyfunction]
fn pairwise_dtw(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(distance::pairwise_dtw(&shapelets_from(a)?, &shapelets_from(b)?))
}

/// (error, complexity) of a shapelet set on `train` with the default model.
#[pyfunction]
fn evaluate_fitness(shapelets: Vec<Vec<f64>>, train: &Dataset) -> PyResult<(f64, usize)> {
    let f = fitness::evaluate_fitness(&shapelets_from(shapelets)?, &train.inner, &Default::default()).map_err(to_py)?;
    Ok((f.error, f.complexity))
}

/// Tunes penalty and C by 3-fold CV on the train distances, refits, and
/// reports test metrics as a dict.
#[pyfunction]
fn tune_and_evaluate<'py>(
    py: Python<'py>,
    shapelets: Vec<Vec<f64>>,
    train: &Dataset,
    test: &Dataset,
) -> PyResult<Bound<'py, PyDict>> {
    let shapelets = shapelets_from(shapelets)?;
    let (tr, te) = (train.inner.clone(), test.inner.clone());
    let report = py
        .detach(move || fitness::tune_and_evaluate(&shapelets, &tr, &te, &TuneOptions::default()))
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("accuracy", report.accuracy)?;
    out.set_item("penalty", report.penalty.to_string())?;
    out.set_item("c", report.c)?;
    out.set_item("cv_log_loss", report.cv_log_loss)?;
    out.set_item("n_shapelets", report.n_shapelets)?;
    out.set_item("predictions", report.predictions)?;
    let per_class: Vec<(usize, f64, f64, usize)> = report
        .per_class
        .iter()
        .map(|m| (m.class, m.precision, m.recall, m.support))
        .collect();
    out.set_item("per_class", per_class)?;
    Ok(out)
}

/// The `k` windows of highest information gain, as (shapelet, gain) pairs.
#[pyfunction]
#[pyo3(signature = (data, k, lengths=None))]
fn top_k_independent(py: Python<'_>, data: &Dataset, k: usize, lengths: Option<Vec<usize>>) -> PyResult<Vec<(Vec<f64>, f64)>> {
    let ds = data.inner.clone();
    let top = py
        .detach(move || {
            let lengths = lengths.unwrap_or_else(|| baseline::all_lengths(&ds));
            baseline::top_k_independent(&ds, k, &lengths)
        })
        .map_err(to_py)?;
    Ok(top.into_iter().map(|c| (c.shapelet.into_inner(), c.gain)).collect())
}

/// Best single window by information gain: (shapelet, gain, threshold).
#[pyfunction]
#[pyo3(signature = (data, lengths=None))]
fn brute_force_best_shapelet(py: Python<'_>, data: &Dataset, lengths: Option<Vec<usize>>) -> PyResult<(Vec<f64>, f64, f64)> {
    let ds = data.inner.clone();
    let best = py
        .detach(move || {
            let lengths = lengths.unwrap_or_else(|| baseline::all_lengths(&ds));
            baseline::brute_force_best_shapelet(&ds, &lengths)
        })
        .map_err(to_py)?;
    Ok((best.shapelet.into_inner(), best.gain, best.threshold))
}

#[pyfunction]
fn gen_imbalanced_threeclass(seed: u64) -> (Dataset, Dataset) {
    let (train, test) = synth::gen_imbalanced_threeclass(&mut ChaCha8Rng::seed_from_u64(seed));
    (Dataset { inner: train }, Dataset { inner: test })
}

#[pyfunction]
fn gen_twoclass_quad() -> Dataset {
    Dataset {
        inner: synth::gen_twoclass_quad(),
    }
}

#[pymodule]
fn shapevo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ShapevoError", m.py().get_type::<ShapevoError>())?;
    m.add_class::<Dataset>()?;
    m.add_class::<GaConfig>()?;
    m.add_class::<EvolveResult>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_single, m)?)?;
    m.add_function(wrap_pyfunction!(subsequence_distance, m)?)?;
    m.add_function(wrap_pyfunction!(distance_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(dtw_distance, m)?)?;
    m.add_function(wrap_pyfunction!(pairwise_dtw, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_fitness, m)?)?;
    m.add_function(wrap_pyfunction!(tune_and_evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(top_k_independent, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_best_shapelet, m)?)?;
    m.add_function(wrap_pyfunction!(gen_imbalanced_threeclass, m)?)?;
    m.add_function(wrap_pyfunction!(gen_twoclass_quad, m)?)?;
    Ok(())
}
