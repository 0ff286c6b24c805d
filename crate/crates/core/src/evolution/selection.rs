use std::cmp::Ordering;

use rand::Rng;

use super::ShapeletSet;
use crate::fitness::{compare_fitness, Fitness};

fn fitness_of(ind: &ShapeletSet) -> &Fitness {
    ind.fitness.as_ref().expect("selection requires evaluated individuals")
}

/// Index of the fittest individual; the first one wins ties.
pub fn best_index(population: &[ShapeletSet]) -> usize {
    let mut best = 0;
    for i in 1..population.len() {
        if compare_fitness(fitness_of(&population[i]), fitness_of(&population[best])) == Ordering::Less {
            best = i;
        }
    }
    best
}

/// Draws `size` contenders uniformly (without replacement when possible),
/// ranks them by fitness and picks rank `r` (0 = best) with probability
/// proportional to `size - r`. Returns the winner's index.
pub fn tournament_select<R: Rng + ?Sized>(population: &[ShapeletSet], size: usize, rng: &mut R) -> usize {
    assert!(!population.is_empty(), "empty population");
    let mut contenders: Vec<usize> = if size <= population.len() {
        rand::seq::index::sample(rng, population.len(), size).into_vec()
    } else {
        (0..size).map(|_| rng.random_range(0..population.len())).collect()
    };
    // stable: equal fitnesses keep their random draw order
    contenders.sort_by(|&a, &b| compare_fitness(fitness_of(&population[a]), fitness_of(&population[b])));
    let total = size * (size + 1) / 2;
    let mut ticket = rng.random_range(0..total);
    for (rank, &idx) in contenders.iter().enumerate() {
        let weight = size - rank;
        if ticket < weight {
            return idx;
        }
        ticket -= weight;
    }
    unreachable!("ticket below total weight")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::Shapelet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn individual(error: f64) -> ShapeletSet {
        let mut s = ShapeletSet::new(vec![Shapelet::new(vec![0.0; 4]).unwrap()]);
        s.fitness = Some(Fitness { error, complexity: 4 });
        s
    }

    #[test]
    fn size_one_returns_the_sampled_individual() {
        let pop = vec![individual(0.3)];
        assert_eq!(tournament_select(&pop, 1, &mut ChaCha8Rng::seed_from_u64(0)), 0);
    }

    #[test]
    fn best_of_three_wins_half_the_time() {
        let pop = vec![individual(0.9), individual(0.1), individual(0.5)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trials = 10_000;
        let mut wins = [0usize; 3];
        for _ in 0..trials {
            wins[tournament_select(&pop, 3, &mut rng)] += 1;
        }
        // weights 3:2:1 -> 1/2, 1/3, 1/6; 4 standard deviations of a binomial
        let expect = [1.0 / 6.0, 0.5, 1.0 / 3.0];
        for (w, p) in wins.iter().zip(expect) {
            let sd = (trials as f64 * p * (1.0 - p)).sqrt();
            assert!((*w as f64 - trials as f64 * p).abs() < 4.0 * sd, "{wins:?}");
        }
    }

    #[test]
    fn ties_are_uniform() {
        let pop: Vec<ShapeletSet> = (0..3).map(|_| individual(0.2)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let trials = 9_000;
        let mut wins = [0usize; 3];
        for _ in 0..trials {
            wins[tournament_select(&pop, 3, &mut rng)] += 1;
        }
        let sd = (trials as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        assert!(wins.iter().all(|&w| (w as f64 - 3000.0).abs() < 4.0 * sd), "{wins:?}");
    }

    #[test]
    fn oversized_tournament_samples_with_replacement() {
        let pop = vec![individual(0.4), individual(0.2)];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert!(tournament_select(&pop, 5, &mut rng) < 2);
        }
    }

    #[test]
    fn best_index_prefers_first_on_ties() {
        let pop = vec![individual(0.4), individual(0.2), individual(0.2)];
        assert_eq!(best_index(&pop), 1);
    }
}
