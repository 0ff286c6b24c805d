use rand::seq::SliceRandom;
use rand::Rng;

use super::{GaConfig, ShapeletSet};
use crate::dataset::{Dataset, MIN_SERIES_LEN};
use crate::distance::Shapelet;
use crate::error::{Error, Result};

const KMEANS_ITERATIONS: usize = 10;

/// Number of windows sampled for K-means initialization.
pub fn kmeans_sample_size(k: usize) -> usize {
    (10 * k).max(50)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm with centroids seeded from `k` distinct points chosen
/// at random. Empty clusters keep their previous centroid.
pub fn kmeans<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, iterations: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.shuffle(rng);
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    for i in order {
        if centroids.len() == k {
            break;
        }
        if !centroids.iter().any(|c| c == &points[i]) {
            centroids.push(points[i].clone());
        }
    }
    if centroids.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} distinct windows for {k} clusters",
            centroids.len()
        )));
    }

    let dim = centroids[0].len();
    let mut assignment = vec![usize::MAX; points.len()];
    for _ in 0..iterations {
        let mut changed = false;
        for (p, slot) in points.iter().zip(assignment.iter_mut()) {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centroids.iter().enumerate() {
                let d = squared_distance(p, c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            if *slot != best {
                *slot = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for ((c, s), &n) in centroids.iter_mut().zip(sums).zip(&counts) {
            if n > 0 {
                *c = s.into_iter().map(|v| v / n as f64).collect();
            }
        }
    }
    Ok(centroids)
}

fn random_window<R: Rng + ?Sized>(dataset: &Dataset, len: usize, rng: &mut R) -> Vec<f64> {
    let series = &dataset.series()[rng.random_range(0..dataset.len())];
    let start = rng.random_range(0..=series.len() - len);
    series.values()[start..start + len].to_vec()
}

/// K-means centroids of random windows sharing one random length in
/// `[4, max_len]`.
pub fn init_kmeans<R: Rng + ?Sized>(dataset: &Dataset, k: usize, max_len: usize, rng: &mut R) -> Result<ShapeletSet> {
    let upper = max_len.min(dataset.min_len());
    if upper < MIN_SERIES_LEN {
        return Err(Error::InsufficientData(format!(
            "series of length {} are shorter than {MIN_SERIES_LEN}",
            dataset.min_len()
        )));
    }
    let len = rng.random_range(MIN_SERIES_LEN..=upper);
    let windows: Vec<Vec<f64>> = (0..kmeans_sample_size(k))
        .map(|_| random_window(dataset, len, rng))
        .collect();
    let centroids = kmeans(&windows, k, KMEANS_ITERATIONS, rng)?;
    Ok(ShapeletSet::new(
        centroids.into_iter().map(Shapelet::from_vec_unchecked).collect(),
    ))
}

/// `k` windows copied verbatim from random series at random offsets, each
/// with a random length in `[4, min(max_len, |series|)]`.
pub fn init_random<R: Rng + ?Sized>(dataset: &Dataset, k: usize, max_len: usize, rng: &mut R) -> ShapeletSet {
    let shapelets = (0..k)
        .map(|_| {
            let series = &dataset.series()[rng.random_range(0..dataset.len())];
            let upper = max_len.min(series.len()).max(MIN_SERIES_LEN);
            let len = rng.random_range(MIN_SERIES_LEN..=upper);
            let start = rng.random_range(0..=series.len() - len);
            Shapelet::from_vec_unchecked(series.values()[start..start + len].to_vec())
        })
        .collect();
    ShapeletSet::new(shapelets)
}

/// `population_size` individuals with K uniform in `[2, max_shapelets]`
/// (or 1 in single-shapelet mode), each seeded by an enabled strategy
/// picked with equal probability.
pub fn init_population<R: Rng + ?Sized>(dataset: &Dataset, cfg: &GaConfig, rng: &mut R) -> Vec<ShapeletSet> {
    let use_kmeans = cfg.operators.has_init(1);
    let use_random = cfg.operators.has_init(2);
    (0..cfg.population_size)
        .map(|_| {
            let k = if cfg.single_shapelet {
                1
            } else {
                rng.random_range(2..=cfg.max_shapelets).min(cfg.cap())
            };
            let kmeans_first = match (use_kmeans, use_random) {
                (true, true) => rng.random_bool(0.5),
                (true, false) => true,
                _ => false,
            };
            if kmeans_first {
                // fall back to raw windows when the data has too few distinct windows
                init_kmeans(dataset, k, cfg.max_len, rng).unwrap_or_else(|_| init_random(dataset, k, cfg.max_len, rng))
            } else {
                init_random(dataset, k, cfg.max_len, rng)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gen_imbalanced_threeclass;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn is_subsequence(s: &[f64], ds: &Dataset) -> bool {
        ds.series().iter().any(|t| t.windows(s.len()).any(|w| w == s))
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let points = vec![vec![0.0, 2.0], vec![2.0, 4.0], vec![4.0, 0.0]];
        let c = kmeans(&points, 1, 10, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(c, vec![vec![2.0, 2.0]]);
    }

    fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
        (0..centroids.len())
            .min_by(|&a, &b| squared_distance(p, &centroids[a]).total_cmp(&squared_distance(p, &centroids[b])))
            .unwrap()
    }

    #[test]
    fn converged_centroids_are_cell_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut points = Vec::new();
        for offset in [0.0, 10.0, 20.0] {
            for _ in 0..20 {
                points.push((0..4).map(|_| offset + rng.random_range(-0.5..0.5)).collect::<Vec<f64>>());
            }
        }
        let mut recovered = 0;
        for seed in 0..20 {
            let mut c = kmeans(&points, 3, 50, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            // Lloyd fixed point: every non-empty cell's mean is its centroid
            for (j, centroid) in c.iter().enumerate() {
                let cell: Vec<&Vec<f64>> = points.iter().filter(|p| nearest(p, &c) == j).collect();
                if cell.is_empty() {
                    continue;
                }
                for d in 0..4 {
                    let mean = cell.iter().map(|p| p[d]).sum::<f64>() / cell.len() as f64;
                    assert!((mean - centroid[d]).abs() < 1e-9, "seed {seed}");
                }
            }
            c.sort_by(|a, b| a[0].total_cmp(&b[0]));
            // true cluster means deviate from the offset by at most the noise radius
            if c.iter().zip([0.0, 10.0, 20.0]).all(|(cen, off)| cen.iter().all(|v| (v - off).abs() < 0.5)) {
                recovered += 1;
            }
        }
        // random seeding lands one centroid per cluster with probability ~0.23
        assert!(recovered >= 1);
    }

    #[test]
    fn too_few_distinct_windows() {
        let points = vec![vec![1.0; 4]; 10];
        assert!(matches!(
            kmeans(&points, 2, 10, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn kmeans_init_uses_one_length() {
        let (train, _) = gen_imbalanced_threeclass(&mut ChaCha8Rng::seed_from_u64(0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 1..5 {
            let set = init_kmeans(&train, k, 20, &mut rng).unwrap();
            assert_eq!(set.len(), k);
            let l = set.shapelets[0].len();
            assert!((4..=20).contains(&l));
            assert!(set.iter().all(|s| s.len() == l));
        }
    }

    #[test]
    fn random_init_copies_windows() {
        let (train, _) = gen_imbalanced_threeclass(&mut ChaCha8Rng::seed_from_u64(0));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let set = init_random(&train, 5, 17, &mut rng);
        assert_eq!(set.len(), 5);
        for s in set.iter() {
            assert!((4..=17).contains(&s.len()));
            assert!(is_subsequence(s, &train));
        }
    }

    #[test]
    fn population_respects_bounds_and_seed() {
        let (train, _) = gen_imbalanced_threeclass(&mut ChaCha8Rng::seed_from_u64(0));
        let cfg = GaConfig::defaults_for(train.min_len(), 0);
        let pop = init_population(&train, &cfg, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(pop.len(), 100);
        assert!(pop.iter().all(|ind| (2..=cfg.max_shapelets).contains(&ind.len())));
        assert_eq!(pop, init_population(&train, &cfg, &mut ChaCha8Rng::seed_from_u64(9)));

        let only_random = GaConfig {
            operators: super::super::Operators::new(&[2], &[1, 2, 3], &[1, 2, 3]).unwrap(),
            ..cfg
        };
        let pop = init_population(&train, &only_random, &mut ChaCha8Rng::seed_from_u64(9));
        assert!(pop.iter().flat_map(|ind| ind.iter()).all(|s| is_subsequence(s, &train)));
    }
}
