use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::dataset::{load_delimited, load_train_test, Dataset, LabelPosition};
use crate::error::{Error, Result};
use crate::evolution::{GaConfig, Operators};
use crate::fitness::ErrorMetric;

/// Run settings read from a flat `key = value` TOML file. Every key can
/// also be given as a command-line flag, which takes precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    /// Training set (delimited text, one series per line)
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Test set, same format as the training set
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Field separator; "whitespace", "tab" or a single character
    #[arg(long)]
    pub delimiter: Option<String>,
    /// Where the class label sits on each line: first or last
    #[arg(long)]
    pub label_position: Option<String>,
    /// Z-normalize every series after loading
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub z_normalize: Option<bool>,

    #[arg(long)]
    pub population_size: Option<usize>,
    #[arg(long)]
    pub max_generations: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub p_crossover: Option<f64>,
    #[arg(long)]
    pub p_mutation: Option<f64>,
    /// Largest K drawn for a fresh individual
    #[arg(long)]
    pub max_shapelets: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub tournament_size: Option<usize>,
    /// Hard cap on shapelets per individual
    #[arg(long)]
    pub max_total_shapelets: Option<usize>,
    /// Fitness error: log_loss or misclassification
    #[arg(long)]
    pub error_metric: Option<String>,

    /// Initialization operators to use (1 = K-means, 2 = random)
    #[arg(long, value_delimiter = ',')]
    pub initializations: Option<Vec<u8>>,
    /// Crossover operators to use (1 = set point, 2 = shapelet point, 3 = merge)
    #[arg(long, value_delimiter = ',')]
    pub crossovers: Option<Vec<u8>>,
    /// Mutation operators to use (1 = mask, 2 = remove, 3 = add)
    #[arg(long, value_delimiter = ',')]
    pub mutations: Option<Vec<u8>>,

    /// Pick max_len from {M/4, M/2, 3M/4, M} by cross-validated log loss
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub max_len_grid: Option<bool>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl RunConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))
    }

    /// Reads a config file. Relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.train, &mut cfg.test, &mut cfg.output_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &RunConfigFile) -> Self {
        overlay!(self, top;
            train, test, delimiter, label_position, z_normalize,
            population_size, max_generations, patience, p_crossover, p_mutation,
            max_shapelets, max_len, tournament_size, max_total_shapelets, error_metric,
            initializations, crossovers, mutations, max_len_grid, output_dir, seed);
        self
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::InvalidConfig("an explicit seed is required (--seed or `seed = ...`)".into()))
    }

    pub fn delimiter_char(&self) -> Result<char> {
        parse_delimiter(self.delimiter.as_deref().unwrap_or(","))
    }

    pub fn label_position(&self) -> Result<LabelPosition> {
        match &self.label_position {
            None => Ok(LabelPosition::First),
            Some(s) => s.parse().map_err(|_| Error::InvalidConfig(format!("label_position '{s}' is not first or last"))),
        }
    }

    pub fn output_dir(&self) -> Result<&Path> {
        self.output_dir
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("output_dir is required".into()))
    }

    fn train_path(&self) -> Result<&Path> {
        self.train
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("train is required".into()))
    }

    fn prepare(&self, ds: Dataset) -> Dataset {
        if self.z_normalize.unwrap_or(false) {
            ds.z_normalized()
        } else {
            ds
        }
    }

    pub fn load_train(&self) -> Result<Dataset> {
        let ds = load_delimited(self.train_path()?, self.delimiter_char()?, self.label_position()?)?;
        Ok(self.prepare(ds))
    }

    /// Training set plus the test set when one is configured.
    pub fn load_data(&self) -> Result<(Dataset, Option<Dataset>)> {
        match &self.test {
            None => Ok((self.load_train()?, None)),
            Some(test) => {
                let (tr, te) = load_train_test(self.train_path()?, test, self.delimiter_char()?, self.label_position()?)?;
                Ok((self.prepare(tr), Some(self.prepare(te))))
            }
        }
    }

    /// GA settings for a training set whose shortest series has length
    /// `m`: library defaults overlaid with every configured field, then
    /// validated.
    pub fn ga_config(&self, m: usize) -> Result<GaConfig> {
        let mut cfg = GaConfig::defaults_for(m, self.seed()?);
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { cfg.$field = v; } )* };
        }
        set!(population_size, max_generations, patience, p_crossover, p_mutation, max_shapelets, max_len, tournament_size);
        cfg.max_total_shapelets = self.max_total_shapelets;
        if let Some(metric) = &self.error_metric {
            cfg.fitness.metric = match metric.as_str() {
                "log_loss" => ErrorMetric::LogLoss,
                "misclassification" => ErrorMetric::Misclassification,
                other => return Err(Error::InvalidConfig(format!("unknown error_metric '{other}'"))),
            };
        }
        let defaults = Operators::default();
        cfg.operators = Operators {
            initializations: self.initializations.clone().unwrap_or(defaults.initializations),
            crossovers: self.crossovers.clone().unwrap_or(defaults.crossovers),
            mutations: self.mutations.clone().unwrap_or(defaults.mutations),
        };
        cfg.validate(m)?;
        Ok(cfg)
    }
}

pub fn parse_delimiter(s: &str) -> Result<char> {
    match s {
        "whitespace" | "space" => Ok(' '),
        "tab" | "\\t" => Ok('\t'),
        _ => {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(c),
                _ => Err(Error::InvalidConfig(format!("delimiter '{s}' must be a single character"))),
            }
        }
    }
}
