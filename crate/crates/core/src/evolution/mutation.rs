use rand::Rng;

use super::init::init_random;
use super::ShapeletSet;
use crate::dataset::{Dataset, MIN_SERIES_LEN};
use crate::distance::Shapelet;

/// Drops between 1 and `|s| - 4` points from the head or tail of one
/// random shapelet. Minimum-length shapelets are left alone.
pub fn mutate_mask<R: Rng + ?Sized>(set: &mut ShapeletSet, rng: &mut R) {
    let idx = rng.random_range(0..set.len());
    let s = &set.shapelets[idx];
    if s.len() <= MIN_SERIES_LEN {
        return;
    }
    let k = rng.random_range(1..=s.len() - MIN_SERIES_LEN);
    let kept = if rng.random_bool(0.5) {
        s[k..].to_vec()
    } else {
        s[..s.len() - k].to_vec()
    };
    set.shapelets[idx] = Shapelet::from_vec_unchecked(kept);
    set.invalidate();
}

/// Removes one random shapelet unless it is the last one.
pub fn mutate_remove<R: Rng + ?Sized>(set: &mut ShapeletSet, rng: &mut R) {
    if set.len() < 2 {
        return;
    }
    let idx = rng.random_range(0..set.len());
    set.shapelets.remove(idx);
    set.invalidate();
}

/// Appends one random window of the data, unless the set is at `cap`.
pub fn mutate_add<R: Rng + ?Sized>(set: &mut ShapeletSet, dataset: &Dataset, max_len: usize, cap: usize, rng: &mut R) {
    if set.len() >= cap {
        return;
    }
    let extra = init_random(dataset, 1, max_len, rng);
    set.shapelets.extend(extra.shapelets);
    set.invalidate();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitness::Fitness;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ramp(len: usize) -> Shapelet {
        Shapelet::new((0..len).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn mask_keeps_prefix_or_suffix() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let original = ramp(10);
        for _ in 0..300 {
            let mut set = ShapeletSet::new(vec![original.clone()]);
            set.fitness = Some(Fitness { error: 0.0, complexity: 10 });
            mutate_mask(&mut set, &mut rng);
            let m = &set.shapelets[0];
            assert!((4..=9).contains(&m.len()));
            let prefix = original[..m.len()] == m[..];
            let suffix = original[10 - m.len()..] == m[..];
            assert!(prefix || suffix);
            assert!(set.fitness.is_none());
        }
        let mut short = ShapeletSet::new(vec![ramp(4)]);
        mutate_mask(&mut short, &mut rng);
        assert_eq!(short.shapelets[0], ramp(4));
    }

    #[test]
    fn remove_keeps_at_least_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut set = ShapeletSet::new((4..9).map(ramp).collect());
        mutate_remove(&mut set, &mut rng);
        assert_eq!(set.len(), 4);
        let mut single = ShapeletSet::new(vec![ramp(5)]);
        mutate_remove(&mut single, &mut rng);
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn remove_is_uniform() {
        // chi-square goodness of fit over 10 positions, 10k trials
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let original: Vec<Shapelet> = (4..14).map(ramp).collect();
        let mut counts = [0usize; 10];
        let trials = 10_000;
        for _ in 0..trials {
            let mut set = ShapeletSet::new(original.clone());
            mutate_remove(&mut set, &mut rng);
            let removed = original.iter().position(|s| !set.shapelets.contains(s)).unwrap();
            counts[removed] += 1;
        }
        let expected = trials as f64 / 10.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 99th percentile of chi-square with 9 degrees of freedom
        assert!(chi2 < 21.666, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn add_appends_a_data_window() {
        let ds = Dataset::from_rows(
            vec![(0..12).map(|v| v as f64).collect(), (0..12).map(|v| -(v as f64)).collect()],
            vec![0, 1],
            2,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base: Vec<Shapelet> = (4..9).map(ramp).collect();
        let mut set = ShapeletSet::new(base.clone());
        mutate_add(&mut set, &ds, 8, usize::MAX, &mut rng);
        assert_eq!(set.len(), 6);
        assert_eq!(&set.shapelets[..5], &base[..]);
        let added = &set.shapelets[5];
        assert!(ds.series().iter().any(|t| t.windows(added.len()).any(|w| w == &added[..])));
        assert!((4..=8).contains(&added.len()));

        let mut capped = ShapeletSet::new(base);
        mutate_add(&mut capped, &ds, 8, 5, &mut rng);
        assert_eq!(capped.len(), 5);
    }
}
