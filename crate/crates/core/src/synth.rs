//! Synthetic datasets for the set-versus-single-candidate, outside-the-data
//! and operator ablation experiments.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::Dataset;

pub const THREECLASS_LEN: usize = 50;
pub const THREECLASS_COUNTS: [usize; 3] = [25, 5, 5];

const BASE_PERIOD: f64 = 20.0;
const BASE_AMPLITUDE: f64 = 0.5;
const FEATURE_CENTER: f64 = 12.0;
const FEATURE_WIDTH: f64 = 1.5;
const FEATURE_AMPLITUDE: f64 = 1.2;
const CLASS0_NOISE: f64 = 0.1;
const PATTERN_START: usize = 30;
const PATTERN_LEN: usize = 12;

fn base_wave(len: usize) -> Vec<f64> {
    (0..len)
        .map(|t| BASE_AMPLITUDE * (2.0 * PI * t as f64 / BASE_PERIOD).sin())
        .collect()
}

fn threeclass_series<R: Rng + ?Sized>(class: usize, rng: &mut R) -> Vec<f64> {
    let mut x = base_wave(THREECLASS_LEN);
    match class {
        0 => {
            let noise = Normal::new(0.0, CLASS0_NOISE).expect("valid sigma");
            for (t, v) in x.iter_mut().enumerate() {
                let z = (t as f64 - FEATURE_CENTER) / FEATURE_WIDTH;
                *v += FEATURE_AMPLITUDE * (-0.5 * z * z).exp() + noise.sample(rng);
            }
        }
        _ => {
            let start = PATTERN_START + rng.random_range(0..3);
            let amplitude = rng.random_range(2.5..3.5);
            for (k, v) in x[start..start + PATTERN_LEN].iter_mut().enumerate() {
                *v += if class == 1 {
                    // square wave with period 4
                    if (k / 2) % 2 == 0 { amplitude } else { -amplitude }
                } else {
                    amplitude
                };
            }
        }
    }
    x
}

fn threeclass_split<R: Rng + ?Sized>(rng: &mut R) -> Dataset {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (class, &count) in THREECLASS_COUNTS.iter().enumerate() {
        for _ in 0..count {
            rows.push(threeclass_series(class, rng));
            labels.push(class);
        }
    }
    Dataset::from_rows(rows, labels, 3).expect("generator output is valid")
}

/// Imbalanced three-class problem with 25/5/5 series per class in both
/// splits.
///
/// Class 0 series are noisy copies of one sine wave carrying a Gaussian
/// bump. Classes 1 and 2 lack the bump and are noise-free outside a
/// high-amplitude pattern (a square wave for class 1, a plateau for
/// class 2) of random amplitude and slightly jittered position. Any
/// shapelet cut from a class 0 series therefore has the same distance to
/// every class 1 and class 2 series, so single-candidate ranking picks
/// shapelets that cannot tell those two classes apart.
pub fn gen_imbalanced_threeclass<R: Rng + ?Sized>(rng: &mut R) -> (Dataset, Dataset) {
    let train = threeclass_split(rng);
    let test = threeclass_split(rng);
    (train, test)
}

pub const QUAD_LEN: usize = 12;
const QUAD_BUMP_WIDTH: usize = 4;
const QUAD_POSITIONS: [usize; 2] = [1, 7];

fn quad_series(bumps: &[usize]) -> Vec<f64> {
    let mut x = vec![0.0; QUAD_LEN];
    for &p in bumps {
        for k in 0..QUAD_BUMP_WIDTH {
            x[p + k] += (PI * (k + 1) as f64 / (QUAD_BUMP_WIDTH + 1) as f64).sin();
        }
    }
    x
}

/// Four noise-free series in an XOR layout: class 0 has one half-sine bump
/// at either of two positions, class 1 has both bumps or none. No window
/// of any series separates the classes by distance, but the average of
/// two windows does.
pub fn gen_twoclass_quad() -> Dataset {
    let [p, q] = QUAD_POSITIONS;
    let rows = vec![quad_series(&[p]), quad_series(&[q]), quad_series(&[p, q]), quad_series(&[])];
    Dataset::from_rows(rows, vec![0, 0, 1, 1], 2).expect("generator output is valid")
}

pub const BENCH_LEN: usize = 65;
pub const BENCH_TRAIN: usize = 27;
pub const BENCH_TEST: usize = 953;

fn bench_series<R: Rng + ?Sized>(class: usize, rng: &mut R) -> Vec<f64> {
    let noise = Normal::new(0.0, 0.35).expect("valid sigma");
    let mut x = vec![0.0; BENCH_LEN];
    // slow drift shared by both classes
    let phase = rng.random_range(0.0..2.0 * PI);
    let drift = rng.random_range(0.3..0.8);
    for (t, v) in x.iter_mut().enumerate() {
        *v = drift * (2.0 * PI * t as f64 / 40.0 + phase).sin() + noise.sample(rng);
    }
    // each class has its own short event, present in most but not all series
    let add_event = |x: &mut Vec<f64>, rng: &mut R, shape: &dyn Fn(f64) -> f64| {
        let width = rng.random_range(6..10);
        let at = rng.random_range(0..BENCH_LEN - width);
        let amp = rng.random_range(0.8..1.6);
        for k in 0..width {
            x[at + k] += amp * shape(k as f64 / (width - 1) as f64);
        }
    };
    let spike = |u: f64| (PI * u).sin();
    let zigzag = |u: f64| (3.0 * PI * u).sin();
    if rng.random_bool(0.85) {
        if class == 0 {
            add_event(&mut x, rng, &spike);
        } else {
            add_event(&mut x, rng, &zigzag);
        }
    }
    // a distractor event both classes share
    if rng.random_bool(0.5) {
        add_event(&mut x, rng, &|u| -(PI * u).sin());
    }
    x
}

/// Two-class train/test pair with the shape of a small robot-sensor
/// benchmark: 27 training and 953 test series of length 65. Classes differ
/// by a randomly placed event shape on top of noise and drift.
pub fn gen_benchmark_twoclass<R: Rng + ?Sized>(rng: &mut R, n_train: usize, n_test: usize) -> (Dataset, Dataset) {
    let mut split = |n: usize| {
        let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= n.div_ceil(2))).collect();
        let rows = labels.iter().map(|&c| bench_series(c, rng)).collect();
        Dataset::from_rows(rows, labels, 2).expect("generator output is valid")
    };
    let train = split(n_train);
    let test = split(n_test);
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn threeclass_counts_are_fixed() {
        for seed in [0, 1, 99] {
            let (train, test) = gen_imbalanced_threeclass(&mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(train.len(), 35);
            assert_eq!(test.len(), 35);
            assert_eq!(train.class_counts(), vec![25, 5, 5]);
            assert_eq!(test.class_counts(), vec![25, 5, 5]);
            assert_eq!(train.min_len(), THREECLASS_LEN);
        }
        let (a, _) = gen_imbalanced_threeclass(&mut ChaCha8Rng::seed_from_u64(1));
        let (b, _) = gen_imbalanced_threeclass(&mut ChaCha8Rng::seed_from_u64(2));
        assert_ne!(a, b);
    }

    #[test]
    fn quad_is_fixed() {
        let d = gen_twoclass_quad();
        assert_eq!(d.len(), 4);
        assert_eq!(d.labels(), &[0, 0, 1, 1]);
        assert_eq!(d, gen_twoclass_quad());
        assert!(d.series()[3].values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn benchmark_shape() {
        let (train, test) = gen_benchmark_twoclass(&mut ChaCha8Rng::seed_from_u64(5), BENCH_TRAIN, 40);
        assert_eq!(train.len(), 27);
        assert_eq!(test.len(), 40);
        assert_eq!(train.min_len(), 65);
        assert_eq!(train.n_classes(), 2);
    }
}
