//! The work behind each subcommand, usable without going through argv.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfigFile;
use crate::baseline::{all_lengths, top_k_independent, CandidateScore};
use crate::dataset::{load_delimited, save_delimited, Dataset, MIN_SERIES_LEN};
use crate::distance::{distance_matrix, pairwise_dtw, DistanceMatrix, Shapelet};
use crate::error::{Error, Result};
use crate::evolution::{evolve, GaConfig, Operators, RunLog, ShapeletSet};
use crate::fitness::{
    cross_validated_log_loss, stratified_folds, tune_and_evaluate, EvaluationReport, Fitness, TuneOptions, CV_FOLDS,
    DEFAULT_FOLD_SEED,
};
use crate::logreg::LogRegParams;
use crate::synth;

pub const SHAPELETS_SCHEMA: u32 = 1;
pub const METRICS_SCHEMA: u32 = 1;
pub const RUNLOG_SCHEMA: u32 = 1;
pub const DISTANCES_SCHEMA: u32 = 1;
pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub max_len: usize,
    pub cv_log_loss: f64,
    pub n_shapelets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeletsMetadata {
    pub method: String,
    pub seed: Option<u64>,
    pub max_len: Option<usize>,
    pub train_sha256: String,
    pub fitness: Option<Fitness>,
    pub config: Option<GaConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub max_len_grid: Vec<GridPoint>,
}

/// Contents of `shapelets.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeletsFile {
    pub schema_version: u32,
    pub shapelets: Vec<Shapelet>,
    pub metadata: ShapeletsMetadata,
}

impl ShapeletsFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("shapelets serialize");
        s.push('\n');
        s
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ShapeletsInput {
    Full(ShapeletsFile),
    Bare(Vec<Vec<f64>>),
}

/// Reads shapelets from a `shapelets.json` file or a bare JSON array of
/// arrays. An empty list is an error.
pub fn read_shapelets(path: &Path) -> Result<Vec<Shapelet>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let input: ShapeletsInput = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("{}: {e}", path.display()),
    })?;
    let shapelets = match input {
        ShapeletsInput::Full(f) => f
            .shapelets
            .into_iter()
            .map(|s| Shapelet::new(s.into_inner()))
            .collect::<Result<Vec<_>>>()?,
        ShapeletsInput::Bare(v) => v.into_iter().map(Shapelet::new).collect::<Result<Vec<_>>>()?,
    };
    if shapelets.is_empty() {
        return Err(Error::InvalidShapelet(format!("{} holds no shapelets", path.display())));
    }
    Ok(shapelets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub schema_version: u32,
    #[serde(flatten)]
    pub report: EvaluationReport,
}

pub fn metrics_json(report: &EvaluationReport) -> String {
    let file = MetricsFile {
        schema_version: METRICS_SCHEMA,
        report: report.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("metrics serialize");
    s.push('\n');
    s
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Key-value manifest. The wall time is the only non-reproducible value
/// any command writes.
pub struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Manifest { lines: Vec::new() };
        m.set("manifest_schema_version", MANIFEST_SCHEMA);
        m.set("command", command);
        m.set("version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn set(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn file(&mut self, name: &str, schema: u32) {
        self.set(&format!("file.{name}.schema_version"), schema);
    }

    pub fn render(&self) -> String {
        self.lines.iter().fold(String::new(), |mut out, (k, v)| {
            let _ = writeln!(out, "{k} = {v}");
            out
        })
    }
}

/// The max_len values tried by the grid: M/4, M/2, 3M/4 and M, keeping
/// those of at least the minimum shapelet length.
pub fn max_len_candidates(m: usize) -> Vec<usize> {
    let mut out: Vec<usize> = [m / 4, m / 2, 3 * m / 4, m]
        .into_iter()
        .filter(|&l| l >= MIN_SERIES_LEN)
        .collect();
    out.dedup();
    out
}

/// Mean 3-fold CV log loss of a default L2 model on the distances.
pub fn grid_score(d: &DistanceMatrix, train: &Dataset) -> Result<f64> {
    let folds = stratified_folds(train.labels(), train.n_classes(), CV_FOLDS, DEFAULT_FOLD_SEED);
    cross_validated_log_loss(d, train.labels(), train.n_classes(), &LogRegParams::default(), &folds, CV_FOLDS)
}

#[derive(Debug, Clone)]
pub struct FitOutput {
    pub best: ShapeletSet,
    pub log: RunLog,
    pub ga: GaConfig,
    pub grid: Vec<GridPoint>,
    pub train_distances: DistanceMatrix,
    pub metrics: Option<EvaluationReport>,
    pub shapelets_file: ShapeletsFile,
}

/// Evolves shapelets on the configured training set, optionally choosing
/// max_len by grid search, and evaluates on the test set if one is given.
pub fn fit(cfg: &RunConfigFile) -> Result<FitOutput> {
    let (train, test) = cfg.load_data()?;
    let m = train.min_len();
    let base = cfg.ga_config(m)?;

    let mut grid = Vec::new();
    let (ga, outcome, train_distances) = if cfg.max_len_grid.unwrap_or(false) {
        let mut best: Option<(f64, GaConfig, crate::evolution::EvolveOutcome, DistanceMatrix)> = None;
        for max_len in max_len_candidates(m) {
            let ga = GaConfig { max_len, ..base.clone() };
            ga.validate(m)?;
            let outcome = evolve(&train, &ga)?;
            let d = distance_matrix(&outcome.best.shapelets, &train)?;
            let loss = grid_score(&d, &train)?;
            grid.push(GridPoint {
                max_len,
                cv_log_loss: loss,
                n_shapelets: outcome.best.len(),
            });
            // candidates ascend, so strict improvement keeps the smaller max_len on ties
            if best.as_ref().is_none_or(|(l, ..)| loss < *l) {
                best = Some((loss, ga, outcome, d));
            }
        }
        let (_, ga, outcome, d) = best.ok_or_else(|| Error::InvalidConfig(format!("no max_len candidate for M = {m}")))?;
        (ga, outcome, d)
    } else {
        let outcome = evolve(&train, &base)?;
        let d = distance_matrix(&outcome.best.shapelets, &train)?;
        (base, outcome, d)
    };

    let metrics = match &test {
        Some(test) => Some(tune_and_evaluate(&outcome.best.shapelets, &train, test, &TuneOptions::default())?),
        None => None,
    };
    let shapelets_file = ShapeletsFile {
        schema_version: SHAPELETS_SCHEMA,
        shapelets: outcome.best.shapelets.clone(),
        metadata: ShapeletsMetadata {
            method: "evolve".into(),
            seed: Some(ga.seed),
            max_len: Some(ga.max_len),
            train_sha256: train.content_hash(),
            fitness: outcome.best.fitness,
            config: Some(ga.clone()),
            max_len_grid: grid.clone(),
        },
    };
    Ok(FitOutput {
        best: outcome.best,
        log: outcome.log,
        ga,
        grid,
        train_distances,
        metrics,
        shapelets_file,
    })
}

/// [`fit`] plus artifacts: shapelets.json, runlog.csv, distances.csv,
/// metrics.json (with a test set) and manifest.txt.
pub fn cmd_fit(cfg: &RunConfigFile) -> Result<FitOutput> {
    let started = Instant::now();
    let dir = cfg.output_dir()?.to_path_buf();
    let out = fit(cfg)?;
    create_dir(&dir)?;
    let mut manifest = Manifest::new("fit");
    write(&dir.join("shapelets.json"), &out.shapelets_file.to_json())?;
    manifest.file("shapelets.json", SHAPELETS_SCHEMA);
    write(&dir.join("runlog.csv"), &out.log.to_csv())?;
    manifest.file("runlog.csv", RUNLOG_SCHEMA);
    write(&dir.join("distances.csv"), &out.train_distances.to_csv())?;
    manifest.file("distances.csv", DISTANCES_SCHEMA);
    if let Some(report) = &out.metrics {
        write(&dir.join("metrics.json"), &metrics_json(report))?;
        manifest.file("metrics.json", METRICS_SCHEMA);
    }
    manifest.set("seed", out.ga.seed);
    manifest.set("chosen_max_len", out.ga.max_len);
    manifest.set("max_len_grid", !out.grid.is_empty());
    for g in &out.grid {
        manifest.set(&format!("grid.max_len_{}.cv_log_loss", g.max_len), format!("{:?}", g.cv_log_loss));
    }
    manifest.set("n_shapelets", out.best.len());
    manifest.set("generations", out.log.len());
    manifest.set("train_sha256", &out.shapelets_file.metadata.train_sha256);
    manifest.set("wall_time_seconds", format!("{:.3}", started.elapsed().as_secs_f64()));
    write(&dir.join("manifest.txt"), &manifest.render())?;
    Ok(out)
}

/// Distances from every series of `data` to every shapelet.
pub fn transform(shapelets: &Path, data: &Path, cfg: &RunConfigFile) -> Result<DistanceMatrix> {
    let shapelets = read_shapelets(shapelets)?;
    let mut ds = load_delimited(data, cfg.delimiter_char()?, cfg.label_position()?)?;
    if cfg.z_normalize.unwrap_or(false) {
        ds = ds.z_normalized();
    }
    distance_matrix(&shapelets, &ds)
}

/// Tunes a regression on the shapelets' train distances and scores it on
/// the test set; train and test come from `cfg`.
pub fn evaluate(shapelets: &Path, cfg: &RunConfigFile) -> Result<EvaluationReport> {
    let shapelets = read_shapelets(shapelets)?;
    let (train, test) = cfg.load_data()?;
    let test = test.ok_or_else(|| Error::InvalidConfig("test is required".into()))?;
    tune_and_evaluate(&shapelets, &train, &test, &TuneOptions::default())
}

#[derive(Debug, Clone)]
pub struct BaselineOutput {
    pub candidates: Vec<CandidateScore>,
    pub metrics: Option<EvaluationReport>,
    pub shapelets_file: ShapeletsFile,
}

/// The `k` best windows by information gain, each scored on its own.
/// `lengths` defaults to every admissible length.
pub fn baseline(cfg: &RunConfigFile, k: usize, lengths: Option<&[usize]>) -> Result<BaselineOutput> {
    let (train, test) = cfg.load_data()?;
    let lengths = lengths.map_or_else(|| all_lengths(&train), <[usize]>::to_vec);
    let candidates = top_k_independent(&train, k, &lengths)?;
    let shapelets: Vec<Shapelet> = candidates.iter().map(|c| c.shapelet.clone()).collect();
    let metrics = match &test {
        Some(test) => Some(tune_and_evaluate(&shapelets, &train, test, &TuneOptions::default())?),
        None => None,
    };
    Ok(BaselineOutput {
        candidates,
        metrics,
        shapelets_file: ShapeletsFile {
            schema_version: SHAPELETS_SCHEMA,
            shapelets,
            metadata: ShapeletsMetadata {
                method: format!("top_k_information_gain(k={k})"),
                seed: None,
                max_len: lengths.iter().copied().max(),
                train_sha256: train.content_hash(),
                fitness: None,
                config: None,
                max_len_grid: Vec::new(),
            },
        },
    })
}

pub fn cmd_baseline(cfg: &RunConfigFile, k: usize, lengths: Option<&[usize]>) -> Result<BaselineOutput> {
    let started = Instant::now();
    let dir = cfg.output_dir()?.to_path_buf();
    let out = baseline(cfg, k, lengths)?;
    create_dir(&dir)?;
    let mut manifest = Manifest::new("baseline");
    write(&dir.join("shapelets.json"), &out.shapelets_file.to_json())?;
    manifest.file("shapelets.json", SHAPELETS_SCHEMA);
    let mut csv = String::from("rank,series,offset,length,gain,threshold\n");
    for (r, c) in out.candidates.iter().enumerate() {
        let _ = writeln!(csv, "{r},{},{},{},{:?},{:?}", c.series, c.offset, c.shapelet.len(), c.gain, c.threshold);
    }
    write(&dir.join("candidates.csv"), &csv)?;
    manifest.file("candidates.csv", 1);
    if let Some(report) = &out.metrics {
        write(&dir.join("metrics.json"), &metrics_json(report))?;
        manifest.file("metrics.json", METRICS_SCHEMA);
    }
    manifest.set("k", k);
    manifest.set("wall_time_seconds", format!("{:.3}", started.elapsed().as_secs_f64()));
    write(&dir.join("manifest.txt"), &manifest.render())?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Ablation {
    Initialization,
    Crossover,
    Mutation,
}

pub const ABLATION_POPULATION: usize = 25;

impl Ablation {
    pub fn name(self) -> &'static str {
        match self {
            Ablation::Initialization => "initialization",
            Ablation::Crossover => "crossover",
            Ablation::Mutation => "mutation",
        }
    }

    pub fn default_generations(self) -> usize {
        match self {
            Ablation::Crossover => 200,
            _ => 75,
        }
    }

    /// Named operator subsets compared by this ablation. Operators of the
    /// other two phases stay fully enabled.
    pub fn configs(self) -> Vec<(&'static str, Operators)> {
        let all = Operators::default();
        let with = |f: &dyn Fn(&mut Operators)| {
            let mut o = all.clone();
            f(&mut o);
            o
        };
        match self {
            Ablation::Initialization => vec![
                ("kmeans_only", with(&|o| o.initializations = vec![1])),
                ("random_only", with(&|o| o.initializations = vec![2])),
                ("both", all.clone()),
            ],
            Ablation::Crossover => vec![
                ("set_point_only", with(&|o| o.crossovers = vec![1])),
                ("shapelet_point_only", with(&|o| o.crossovers = vec![2])),
                ("merge_only", with(&|o| o.crossovers = vec![3])),
                ("all", all.clone()),
            ],
            Ablation::Mutation => vec![
                ("mask_only", with(&|o| o.mutations = vec![1])),
                ("remove_only", with(&|o| o.mutations = vec![2])),
                ("add_only", with(&|o| o.mutations = vec![3])),
                ("without_add", with(&|o| o.mutations = vec![1, 2])),
                ("all", all.clone()),
            ],
        }
    }
}

#[derive(Debug, Clone)]
pub struct AblationRun {
    pub name: &'static str,
    pub operators: Operators,
    pub log: RunLog,
}

impl AblationRun {
    pub fn final_mean_error(&self) -> f64 {
        self.log.records.last().map_or(f64::NAN, |r| r.mean_error)
    }
}

/// Runs each operator subset of `ablation` from the same seed with a
/// population of 25 and early stopping disabled.
pub fn run_ablation(train: &Dataset, ablation: Ablation, seed: u64, generations: Option<usize>) -> Result<Vec<AblationRun>> {
    let g = generations.unwrap_or_else(|| ablation.default_generations());
    ablation
        .configs()
        .into_iter()
        .map(|(name, operators)| {
            let cfg = GaConfig {
                population_size: ABLATION_POPULATION,
                max_generations: g,
                patience: g,
                operators: operators.clone(),
                ..GaConfig::defaults_for(train.min_len(), seed)
            };
            let outcome = evolve(train, &cfg)?;
            Ok(AblationRun {
                name,
                operators,
                log: outcome.log,
            })
        })
        .collect()
}

/// Writes one runlog per subset plus a summary of final errors.
pub fn cmd_benchmark_operators(
    cfg: &RunConfigFile,
    ablations: &[Ablation],
    generations: Option<usize>,
) -> Result<Vec<(Ablation, Vec<AblationRun>)>> {
    let started = Instant::now();
    let seed = cfg.seed()?;
    let dir = cfg.output_dir()?.to_path_buf();
    let train = cfg.load_train()?;
    create_dir(&dir)?;
    let mut manifest = Manifest::new("benchmark-operators");
    manifest.set("seed", seed);
    manifest.set("population_size", ABLATION_POPULATION);
    let mut summary = String::from("ablation,config,generations,final_best_error,final_mean_error,final_mean_k\n");
    let mut all = Vec::new();
    for &ablation in ablations {
        let runs = run_ablation(&train, ablation, seed, generations)?;
        for run in &runs {
            let name = format!("{}_{}.csv", ablation.name(), run.name);
            write(&dir.join(&name), &run.log.to_csv())?;
            manifest.file(&name, RUNLOG_SCHEMA);
            let last = run.log.records.last().expect("at least one record");
            let _ = writeln!(
                summary,
                "{},{},{},{:?},{:?},{:?}",
                ablation.name(),
                run.name,
                run.log.len(),
                last.best_error,
                last.mean_error,
                last.mean_k
            );
        }
        all.push((ablation, runs));
    }
    write(&dir.join("summary.csv"), &summary)?;
    manifest.file("summary.csv", 1);
    manifest.set("wall_time_seconds", format!("{:.3}", started.elapsed().as_secs_f64()));
    write(&dir.join("manifest.txt"), &manifest.render())?;
    Ok(all)
}

pub const STABILITY_CAP: usize = 10;

#[derive(Debug, Clone)]
pub struct StabilityOutput {
    pub a: ShapeletSet,
    pub b: ShapeletSet,
    pub dtw: Vec<Vec<f64>>,
}

pub fn dtw_csv(dtw: &[Vec<f64>], n_cols: usize) -> String {
    let mut out = String::from("shapelet");
    for j in 0..n_cols {
        let _ = write!(out, ",b_{j}");
    }
    out.push('\n');
    for (i, row) in dtw.iter().enumerate() {
        let _ = write!(out, "a_{i}");
        for v in row {
            let _ = write!(out, ",{v:?}");
        }
        out.push('\n');
    }
    out
}

/// Evolves twice with different seeds under a 10-shapelet cap and compares
/// the two elites by pairwise DTW.
pub fn stability(cfg: &RunConfigFile, seed_a: u64, seed_b: u64) -> Result<StabilityOutput> {
    let train = cfg.load_train()?;
    let run = |seed: u64| -> Result<ShapeletSet> {
        let with_seed = RunConfigFile {
            seed: Some(seed),
            max_total_shapelets: Some(STABILITY_CAP),
            ..cfg.clone()
        };
        let ga = with_seed.ga_config(train.min_len())?;
        Ok(evolve(&train, &ga)?.best)
    };
    let a = run(seed_a)?;
    let b = run(seed_b)?;
    let dtw = pairwise_dtw(&a.shapelets, &b.shapelets);
    Ok(StabilityOutput { a, b, dtw })
}

pub fn cmd_stability(cfg: &RunConfigFile, seed_a: u64, seed_b: u64) -> Result<StabilityOutput> {
    let started = Instant::now();
    let dir = cfg.output_dir()?.to_path_buf();
    let out = stability(cfg, seed_a, seed_b)?;
    create_dir(&dir)?;
    let mut manifest = Manifest::new("stability");
    write(&dir.join("dtw.csv"), &dtw_csv(&out.dtw, out.b.len()))?;
    manifest.file("dtw.csv", 1);
    for (name, set, seed) in [("shapelets_a.json", &out.a, seed_a), ("shapelets_b.json", &out.b, seed_b)] {
        let file = ShapeletsFile {
            schema_version: SHAPELETS_SCHEMA,
            shapelets: set.shapelets.clone(),
            metadata: ShapeletsMetadata {
                method: "evolve".into(),
                seed: Some(seed),
                max_len: set.iter().map(|s| s.len()).max(),
                train_sha256: cfg.load_train()?.content_hash(),
                fitness: set.fitness,
                config: None,
                max_len_grid: Vec::new(),
            },
        };
        write(&dir.join(name), &file.to_json())?;
        manifest.file(name, SHAPELETS_SCHEMA);
    }
    manifest.set("seed_a", seed_a);
    manifest.set("seed_b", seed_b);
    manifest.set("max_total_shapelets", STABILITY_CAP);
    manifest.set("wall_time_seconds", format!("{:.3}", started.elapsed().as_secs_f64()));
    write(&dir.join("manifest.txt"), &manifest.render())?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SynthKind {
    /// Imbalanced three-class set: train and test files
    Threeclass,
    /// Four series whose classes no single window separates: one file
    Quad,
    /// Two-class benchmark set for operator ablations: train and test files
    Benchmark,
}

/// Writes a synthetic dataset as comma-delimited files and returns their
/// paths. `seed` is required for the randomized generators.
pub fn cmd_synth(kind: SynthKind, out_dir: &Path, seed: Option<u64>) -> Result<Vec<PathBuf>> {
    create_dir(out_dir)?;
    let need_seed = || seed.ok_or_else(|| Error::InvalidConfig("an explicit --seed is required".into()));
    let files: Vec<(&str, Dataset)> = match kind {
        SynthKind::Threeclass => {
            let (train, test) = synth::gen_imbalanced_threeclass(&mut ChaCha8Rng::seed_from_u64(need_seed()?));
            vec![("threeclass_TRAIN.txt", train), ("threeclass_TEST.txt", test)]
        }
        SynthKind::Quad => vec![("quad_TRAIN.txt", synth::gen_twoclass_quad())],
        SynthKind::Benchmark => {
            let mut rng = ChaCha8Rng::seed_from_u64(need_seed()?);
            let (train, test) = synth::gen_benchmark_twoclass(&mut rng, synth::BENCH_TRAIN, synth::BENCH_TEST);
            vec![("benchmark_TRAIN.txt", train), ("benchmark_TEST.txt", test)]
        }
    };
    files
        .into_iter()
        .map(|(name, ds)| {
            let path = out_dir.join(name);
            save_delimited(&ds, &path, ',')?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_for_italy_length() {
        assert_eq!(max_len_candidates(24), vec![6, 12, 18, 24]);
        assert_eq!(max_len_candidates(12), vec![6, 9, 12]);
        assert_eq!(max_len_candidates(4), vec![4]);
        assert_eq!(max_len_candidates(8), vec![4, 6, 8]);
    }

    #[test]
    fn ablation_sets() {
        assert_eq!(Ablation::Initialization.configs().len(), 3);
        assert_eq!(Ablation::Crossover.configs().len(), 4);
        assert_eq!(Ablation::Crossover.default_generations(), 200);
        for a in [Ablation::Initialization, Ablation::Crossover, Ablation::Mutation] {
            for (_, ops) in a.configs() {
                ops.validate().unwrap();
            }
        }
    }

    #[test]
    fn dtw_csv_layout() {
        let csv = dtw_csv(&[vec![0.0, 1.5]], 2);
        assert_eq!(csv, "shapelet,b_0,b_1\na_0,0.0,1.5\n");
    }

    #[test]
    fn manifest_lines() {
        let mut m = Manifest::new("fit");
        m.file("runlog.csv", 1);
        let text = m.render();
        assert!(text.starts_with("manifest_schema_version = 1\ncommand = fit\n"));
        assert!(text.contains("file.runlog.csv.schema_version = 1\n"));
    }
}
