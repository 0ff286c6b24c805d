//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 internal invariant violation.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::*;
pub use config::{parse_delimiter, RunConfigFile};

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "shapevo", version, about = "Evolutionary shapelet discovery for time-series classification")]
pub struct Cli {
    /// Worker threads (1 = fully sequential)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct ConfigArgs {
    /// TOML file with run settings; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: RunConfigFile,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfigFile> {
        let base = match &self.config {
            Some(path) => RunConfigFile::load(path)?,
            None => RunConfigFile::default(),
        };
        Ok(base.overlay(&self.overrides))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a shapelet set and write shapelets.json, runlog.csv,
    /// distances.csv, metrics.json and manifest.txt
    Fit(ConfigArgs),
    /// Write the distance of every series to every shapelet as CSV
    Transform {
        #[arg(long)]
        shapelets: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Tune a logistic regression on shapelet distances and report test metrics
    Evaluate {
        #[arg(long)]
        shapelets: PathBuf,
        /// Output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Keep the k windows with the highest information gain
    Baseline {
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Candidate lengths; every admissible length when omitted
        #[arg(long, value_delimiter = ',')]
        lengths: Option<Vec<usize>>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Compare operator subsets by their per-generation fitness curves
    BenchmarkOperators {
        /// Which ablations to run; all three when omitted
        #[arg(long, value_enum, value_delimiter = ',')]
        ablation: Vec<Ablation>,
        /// Generations per run (default 75, or 200 for crossovers)
        #[arg(long)]
        generations: Option<usize>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Evolve twice with two seeds and compare the elites by DTW
    Stability {
        #[arg(long)]
        seed_a: u64,
        #[arg(long)]
        seed_b: u64,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Write a synthetic dataset
    Synth {
        #[arg(value_enum)]
        which: SynthKind,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) => EXIT_USAGE,
        Error::ShapeMismatch(_) => EXIT_INTERNAL,
        Error::Parse { .. }
        | Error::EmptyFile
        | Error::InvalidDataset(_)
        | Error::IncompatibleDatasets(_)
        | Error::ShapeletTooLong { .. }
        | Error::InvalidShapelet(_)
        | Error::DegenerateInput(_)
        | Error::InsufficientData(_)
        | Error::InsufficientCandidates { .. }
        | Error::Io { .. } => EXIT_DATA,
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        }),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Fit(args) => {
            let out = cmd_fit(&args.resolve()?)?;
            let fitness = out.best.fitness.expect("elite is evaluated");
            print!(
                "shapelets={} max_len={} error={:?} complexity={}",
                out.best.len(),
                out.ga.max_len,
                fitness.error,
                fitness.complexity
            );
            if let Some(m) = &out.metrics {
                print!(" test_accuracy={:?}", m.accuracy);
            }
            println!();
        }
        Command::Transform { shapelets, data, out, cfg } => {
            let d = transform(shapelets, data, &cfg.resolve()?)?;
            emit(out, &d.to_csv())?;
        }
        Command::Evaluate { shapelets, out, cfg } => {
            let report = evaluate(shapelets, &cfg.resolve()?)?;
            emit(out, &metrics_json(&report))?;
        }
        Command::Baseline { k, lengths, cfg } => {
            let out = cmd_baseline(&cfg.resolve()?, *k, lengths.as_deref())?;
            for c in &out.candidates {
                println!("series={} offset={} length={} gain={:?}", c.series, c.offset, c.shapelet.len(), c.gain);
            }
            if let Some(m) = &out.metrics {
                println!("test_accuracy={:?}", m.accuracy);
            }
        }
        Command::BenchmarkOperators { ablation, generations, cfg } => {
            let ablations = if ablation.is_empty() {
                vec![Ablation::Initialization, Ablation::Crossover, Ablation::Mutation]
            } else {
                ablation.clone()
            };
            for (a, runs) in cmd_benchmark_operators(&cfg.resolve()?, &ablations, *generations)? {
                for run in runs {
                    println!("{} {} final_mean_error={:?}", a.name(), run.name, run.final_mean_error());
                }
            }
        }
        Command::Stability { seed_a, seed_b, cfg } => {
            let out = cmd_stability(&cfg.resolve()?, *seed_a, *seed_b)?;
            println!("a={} b={}", out.a.len(), out.b.len());
        }
        Command::Synth { which, out_dir, seed } => {
            for path in cmd_synth(*which, out_dir, *seed)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Error::InvalidConfig("--threads must be >= 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli.command)),
            Err(e) => Err(Error::InvalidConfig(format!("cannot build thread pool: {e}"))),
        },
        None => execute(&cli.command),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
