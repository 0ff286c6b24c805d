//! The genetic algorithm over shapelet sets.
//!
//! An individual is a [`ShapeletSet`]. Populations are seeded by K-means
//! centroids of random windows or by raw random windows, varied by three
//! crossovers and three mutations, and selected by small rank-weighted
//! tournaments with elitism and early stopping.

mod crossover;
mod engine;
mod init;
mod mutation;
mod selection;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::MIN_SERIES_LEN;
use crate::distance::Shapelet;
use crate::error::{Error, Result};
use crate::fitness::{complexity, Fitness, FitnessParams};

pub use crossover::{
    crossover_merge, crossover_set_point, crossover_shapelet_point, merge_shapelets, one_point_sets,
    splice_one_point, splice_two_point, two_point_sets,
};
pub use engine::{evaluate_population, evolve, evolve_single, evolve_with_observer, EvolveOutcome};
pub use init::{init_kmeans, init_population, init_random, kmeans, kmeans_sample_size};
pub use mutation::{mutate_add, mutate_mask, mutate_remove};
pub use selection::{best_index, tournament_select};

/// One GA individual: an ordered set of shapelets with a cached fitness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeletSet {
    pub shapelets: Vec<Shapelet>,
    #[serde(skip)]
    pub fitness: Option<Fitness>,
}

impl ShapeletSet {
    pub fn new(shapelets: Vec<Shapelet>) -> Self {
        ShapeletSet {
            shapelets,
            fitness: None,
        }
    }

    pub fn len(&self) -> usize {
        self.shapelets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapelets.is_empty()
    }

    pub fn complexity(&self) -> usize {
        complexity(&self.shapelets)
    }

    pub fn invalidate(&mut self) {
        self.fitness = None;
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Shapelet> {
        self.shapelets.iter()
    }
}

impl From<Vec<Shapelet>> for ShapeletSet {
    fn from(shapelets: Vec<Shapelet>) -> Self {
        ShapeletSet::new(shapelets)
    }
}

/// Which operators the run may use, as 1-based indices:
/// initializations 1 = K-means, 2 = random windows; crossovers 1 = set
/// point, 2 = shapelet point, 3 = merge; mutations 1 = mask, 2 = remove,
/// 3 = add.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Operators {
    pub initializations: Vec<u8>,
    pub crossovers: Vec<u8>,
    pub mutations: Vec<u8>,
}

impl Default for Operators {
    fn default() -> Self {
        Operators {
            initializations: vec![1, 2],
            crossovers: vec![1, 2, 3],
            mutations: vec![1, 2, 3],
        }
    }
}

impl Operators {
    pub fn new(initializations: &[u8], crossovers: &[u8], mutations: &[u8]) -> Result<Self> {
        let ops = Operators {
            initializations: initializations.to_vec(),
            crossovers: crossovers.to_vec(),
            mutations: mutations.to_vec(),
        };
        ops.validate()?;
        Ok(ops)
    }

    pub fn validate(&self) -> Result<()> {
        fn check(kind: &str, list: &[u8], max: u8) -> Result<()> {
            let mut seen = [false; 4];
            for &i in list {
                if i == 0 || i > max {
                    return Err(Error::InvalidConfig(format!("{kind} index {i} not in 1..={max}")));
                }
                if seen[i as usize] {
                    return Err(Error::InvalidConfig(format!("{kind} index {i} listed twice")));
                }
                seen[i as usize] = true;
            }
            Ok(())
        }
        check("initialization", &self.initializations, 2)?;
        check("crossover", &self.crossovers, 3)?;
        check("mutation", &self.mutations, 3)?;
        if self.initializations.is_empty() {
            return Err(Error::InvalidConfig("at least one initialization is required".into()));
        }
        Ok(())
    }

    pub fn has_init(&self, i: u8) -> bool {
        self.initializations.contains(&i)
    }

    pub fn has_crossover(&self, i: u8) -> bool {
        self.crossovers.contains(&i)
    }

    pub fn has_mutation(&self, i: u8) -> bool {
        self.mutations.contains(&i)
    }
}

/// All hyper-parameters of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub patience: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    /// Upper bound on K for freshly initialized individuals.
    pub max_shapelets: usize,
    pub max_len: usize,
    pub tournament_size: usize,
    pub seed: u64,
    /// Hard cap on set size; growth operators become no-ops at the cap.
    pub max_total_shapelets: Option<usize>,
    pub operators: Operators,
    /// Initialize every individual with exactly one shapelet.
    pub single_shapelet: bool,
    pub fitness: FitnessParams,
}

impl GaConfig {
    /// Defaults for a dataset whose shortest series has length `m`.
    pub fn defaults_for(m: usize, seed: u64) -> GaConfig {
        GaConfig {
            population_size: 100,
            max_generations: 100,
            patience: 10,
            p_crossover: 0.4,
            p_mutation: 0.1,
            max_shapelets: ((m as f64).sqrt().floor() as usize).max(2),
            max_len: m,
            tournament_size: 3,
            seed,
            max_total_shapelets: None,
            operators: Operators::default(),
            single_shapelet: false,
            fitness: FitnessParams::default(),
        }
    }

    /// Checks the invariants against the shortest series length `m`.
    pub fn validate(&self, m: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.population_size < 2 {
            return fail(format!("population_size must be >= 2, got {}", self.population_size));
        }
        if self.max_generations < 1 {
            return fail("max_generations must be >= 1".into());
        }
        if self.patience < 1 {
            return fail("patience must be >= 1".into());
        }
        for (name, p) in [("p_crossover", self.p_crossover), ("p_mutation", self.p_mutation)] {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.max_shapelets < 2 {
            return fail(format!("max_shapelets must be >= 2, got {}", self.max_shapelets));
        }
        if self.max_len < MIN_SERIES_LEN || self.max_len > m {
            return fail(format!(
                "max_len must lie in [{MIN_SERIES_LEN}, {m}], got {}",
                self.max_len
            ));
        }
        if self.tournament_size < 1 {
            return fail("tournament_size must be >= 1".into());
        }
        if self.max_total_shapelets == Some(0) {
            return fail("max_total_shapelets must be >= 1".into());
        }
        self.operators.validate()
    }

    /// Size bound for an individual, if any.
    pub(crate) fn cap(&self) -> usize {
        self.max_total_shapelets.unwrap_or(usize::MAX)
    }
}

/// Population statistics after one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_error: f64,
    pub best_complexity: usize,
    pub mean_error: f64,
    pub mean_complexity: f64,
    pub mean_k: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub records: Vec<GenerationRecord>,
}

/// Columns of [`RunLog::to_csv`]. Wall-clock times are kept out of the CSV
/// so identical runs produce identical files.
pub const RUNLOG_HEADER: &str = "generation,best_error,best_complexity,mean_error,mean_complexity,mean_k";

impl RunLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn best_fitnesses(&self) -> impl Iterator<Item = Fitness> + '_ {
        self.records.iter().map(|r| Fitness {
            error: r.best_error,
            complexity: r.best_complexity,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(RUNLOG_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:?},{},{:?},{:?},{:?}",
                r.generation, r.best_error, r.best_complexity, r.mean_error, r.mean_complexity, r.mean_k
            );
        }
        out
    }

    /// Copy with wall-clock times zeroed, for comparing runs.
    pub fn without_timing(&self) -> RunLog {
        RunLog {
            records: self
                .records
                .iter()
                .map(|r| GenerationRecord { seconds: 0.0, ..r.clone() })
                .collect(),
        }
    }
}
