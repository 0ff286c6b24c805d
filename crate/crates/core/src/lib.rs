//! Evolutionary discovery of shapelet sets for time-series classification.
//!
//! A population of variable-size sets of variable-length shapelets is
//! evolved with a genetic algorithm. Each set is scored by transforming the
//! training series into shapelet distances and fitting a softmax regression
//! on them; smaller sets win ties.
//!
//! ```no_run
//! use shapevo::{dataset, evolution::{evolve, GaConfig}};
//!
//! let train = dataset::load_delimited("train.txt", ',', Default::default()).unwrap();
//! let cfg = GaConfig::defaults_for(train.min_len(), 42);
//! let outcome = evolve(&train, &cfg).unwrap();
//! println!("{} shapelets", outcome.best.len());
//! ```

pub mod baseline;
pub mod cli;
pub mod dataset;
pub mod distance;
pub mod error;
pub mod evolution;
pub mod fitness;
pub mod logreg;
pub mod synth;

pub use dataset::{Dataset, LabelPosition, TimeSeries};
pub use distance::{distance_matrix, dtw_distance, pairwise_dtw, subsequence_distance, DistanceMatrix, Shapelet};
pub use error::{Error, Result};
pub use evolution::{evolve, evolve_single, GaConfig, RunLog, ShapeletSet};
pub use fitness::{compare_fitness, evaluate_fitness, tune_and_evaluate, Fitness};
