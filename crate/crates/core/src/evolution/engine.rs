use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::crossover::{crossover_merge, crossover_set_point, crossover_shapelet_point};
use super::init::init_population;
use super::mutation::{mutate_add, mutate_mask, mutate_remove};
use super::selection::{best_index, tournament_select};
use super::{GaConfig, GenerationRecord, RunLog, ShapeletSet};
use crate::dataset::Dataset;
use crate::distance::Shapelet;
use crate::error::{Error, Result};
use crate::fitness::{evaluate_fitness, FitnessParams};

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub best: ShapeletSet,
    pub log: RunLog,
}

/// Scores every individual without a cached fitness. Individuals are
/// evaluated in parallel on the current rayon pool and written back in
/// population order.
pub fn evaluate_population(population: &mut [ShapeletSet], dataset: &Dataset, params: &FitnessParams) -> Result<()> {
    let results: Vec<(usize, Result<_>)> = population
        .par_iter()
        .enumerate()
        .filter(|(_, ind)| ind.fitness.is_none())
        .map(|(i, ind)| (i, evaluate_fitness(&ind.shapelets, dataset, params)))
        .collect();
    for (i, fitness) in results {
        population[i].fitness = Some(fitness?);
    }
    Ok(())
}

fn apply_crossovers<R: Rng + ?Sized>(population: &mut [ShapeletSet], cfg: &GaConfig, rng: &mut R) {
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.shuffle(rng);
    for pair in order.chunks_exact(2) {
        let (i, j) = (pair[0], pair[1]);
        for op in [1u8, 2, 3] {
            if !cfg.operators.has_crossover(op) || !rng.random_bool(cfg.p_crossover) {
                continue;
            }
            let (a, b) = (&population[i], &population[j]);
            let (x, y) = match op {
                1 => crossover_set_point(a, b, cfg.cap(), rng),
                2 => crossover_shapelet_point(a, b, cfg.max_len, rng),
                _ => crossover_merge(a, b, rng),
            };
            population[i] = x;
            population[j] = y;
        }
    }
}

fn apply_mutations<R: Rng + ?Sized>(population: &mut [ShapeletSet], dataset: &Dataset, cfg: &GaConfig, rng: &mut R) {
    for ind in population.iter_mut() {
        for op in [1u8, 2, 3] {
            if !cfg.operators.has_mutation(op) || !rng.random_bool(cfg.p_mutation) {
                continue;
            }
            match op {
                1 => mutate_mask(ind, rng),
                2 => mutate_remove(ind, rng),
                _ => mutate_add(ind, dataset, cfg.max_len, cfg.cap(), rng),
            }
        }
    }
}

fn record(generation: usize, elite: &ShapeletSet, population: &[ShapeletSet], started: Instant) -> GenerationRecord {
    let n = population.len() as f64;
    let best = elite.fitness.expect("elite is evaluated");
    GenerationRecord {
        generation,
        best_error: best.error,
        best_complexity: best.complexity,
        mean_error: population.iter().map(|p| p.fitness.expect("evaluated").error).sum::<f64>() / n,
        mean_complexity: population.iter().map(|p| p.complexity() as f64).sum::<f64>() / n,
        mean_k: population.iter().map(|p| p.len() as f64).sum::<f64>() / n,
        seconds: started.elapsed().as_secs_f64(),
    }
}

/// [`evolve`] with a callback invoked on the population at the start of
/// every generation (after initialization and after each selection).
pub fn evolve_with_observer(
    dataset: &Dataset,
    cfg: &GaConfig,
    observer: &mut dyn FnMut(usize, &[ShapeletSet]),
) -> Result<EvolveOutcome> {
    cfg.validate(dataset.min_len())?;
    if dataset.n_classes() < 2 {
        return Err(Error::DegenerateInput("need at least two classes".into()));
    }
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut population = init_population(dataset, cfg, &mut rng);
    evaluate_population(&mut population, dataset, &cfg.fitness)?;
    let mut elite = population[best_index(&population)].clone();
    let mut log = RunLog::default();
    log.records.push(record(0, &elite, &population, started));
    observer(0, &population);

    let mut stale = 0;
    for generation in 1..cfg.max_generations {
        apply_crossovers(&mut population, cfg, &mut rng);
        apply_mutations(&mut population, dataset, cfg, &mut rng);
        evaluate_population(&mut population, dataset, &cfg.fitness)?;

        let candidate = &population[best_index(&population)];
        let improved = candidate
            .fitness
            .expect("evaluated")
            .is_fitter_than(elite.fitness.as_ref().expect("evaluated"));
        if improved {
            elite = candidate.clone();
            stale = 0;
        } else {
            stale += 1;
        }

        let mut next = Vec::with_capacity(cfg.population_size);
        next.push(elite.clone());
        while next.len() < cfg.population_size {
            let winner = tournament_select(&population, cfg.tournament_size, &mut rng);
            next.push(population[winner].clone());
        }
        population = next;

        log.records.push(record(generation, &elite, &population, started));
        observer(generation, &population);
        if stale >= cfg.patience {
            break;
        }
    }
    Ok(EvolveOutcome { best: elite, log })
}

/// Runs the genetic algorithm and returns the fittest set found together
/// with per-generation statistics. Deterministic for a given `cfg.seed`,
/// independent of the rayon pool size.
pub fn evolve(dataset: &Dataset, cfg: &GaConfig) -> Result<EvolveOutcome> {
    evolve_with_observer(dataset, cfg, &mut |_, _| {})
}

/// Searches for one shapelet: every individual holds exactly one, and the
/// set-level crossover and the add mutation are disabled.
pub fn evolve_single(dataset: &Dataset, cfg: &GaConfig) -> Result<(Shapelet, EvolveOutcome)> {
    let mut single = cfg.clone();
    single.single_shapelet = true;
    single.operators.crossovers.retain(|&c| c != 1);
    single.operators.mutations.retain(|&m| m != 3);
    let outcome = evolve(dataset, &single)?;
    let shapelet = outcome.best.shapelets[0].clone();
    Ok((shapelet, outcome))
}
