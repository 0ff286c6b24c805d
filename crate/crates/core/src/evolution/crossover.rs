use rand::Rng;

use super::ShapeletSet;
use crate::dataset::MIN_SERIES_LEN;
use crate::distance::Shapelet;

const MAX_REDRAWS: usize = 20;

fn concat<T: Clone>(parts: &[&[T]]) -> Vec<T> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

/// One-point crossover of two lists cut at `i` in `a` and `j` in `b`:
/// `(a[..i] + b[j..], b[..j] + a[i..])`.
pub fn one_point_sets<T: Clone>(a: &[T], b: &[T], i: usize, j: usize) -> (Vec<T>, Vec<T>) {
    (concat(&[&a[..i], &b[j..]]), concat(&[&b[..j], &a[i..]]))
}

/// Two-point crossover exchanging the middle segments `a[i1..i2]` and `b[j1..j2]`.
pub fn two_point_sets<T: Clone>(a: &[T], b: &[T], (i1, i2): (usize, usize), (j1, j2): (usize, usize)) -> (Vec<T>, Vec<T>) {
    (
        concat(&[&a[..i1], &b[j1..j2], &a[i2..]]),
        concat(&[&b[..j1], &a[i1..i2], &b[j2..]]),
    )
}

fn ordered_pair<R: Rng + ?Sized>(upper: usize, rng: &mut R) -> (usize, usize) {
    let x = rng.random_range(0..=upper);
    let y = rng.random_range(0..=upper);
    (x.min(y), x.max(y))
}

/// Recombines the shapelet lists of two sets with one- or two-point
/// crossover (equal odds). Shapelets are moved unchanged; cut points are
/// redrawn while a child would be empty or exceed `cap`, and the parents
/// are returned unchanged if no valid draw is found.
pub fn crossover_set_point<R: Rng + ?Sized>(
    a: &ShapeletSet,
    b: &ShapeletSet,
    cap: usize,
    rng: &mut R,
) -> (ShapeletSet, ShapeletSet) {
    let one_point = rng.random_bool(0.5);
    for _ in 0..MAX_REDRAWS {
        let (x, y) = if one_point {
            let i = rng.random_range(0..=a.len());
            let j = rng.random_range(0..=b.len());
            one_point_sets(&a.shapelets, &b.shapelets, i, j)
        } else {
            let ci = ordered_pair(a.len(), rng);
            let cj = ordered_pair(b.len(), rng);
            two_point_sets(&a.shapelets, &b.shapelets, ci, cj)
        };
        let ok = |v: &Vec<Shapelet>| !v.is_empty() && v.len() <= cap;
        if ok(&x) && ok(&y) {
            return (ShapeletSet::new(x), ShapeletSet::new(y));
        }
    }
    (a.clone(), b.clone())
}

/// `s[..cut] + u[cut..]`; the child has the partner's length.
pub fn splice_one_point(s: &[f64], u: &[f64], cut: usize) -> Vec<f64> {
    concat(&[&s[..cut], &u[cut..]])
}

/// `s[..c1] + u[c1..c2] + s[c2..]`; the child keeps `s`'s length.
pub fn splice_two_point(s: &[f64], u: &[f64], c1: usize, c2: usize) -> Vec<f64> {
    concat(&[&s[..c1], &u[c1..c2], &s[c2..]])
}

fn splice_pass<R: Rng + ?Sized>(from: &ShapeletSet, partners: &ShapeletSet, max_len: usize, rng: &mut R) -> ShapeletSet {
    let shapelets = from
        .iter()
        .map(|s| {
            let u = &partners.shapelets[rng.random_range(0..partners.len())];
            let shared = s.len().min(u.len());
            let one_point = rng.random_bool(0.5);
            for _ in 0..MAX_REDRAWS {
                let child = if one_point {
                    splice_one_point(s, u, rng.random_range(0..=shared))
                } else {
                    let (c1, c2) = ordered_pair(shared, rng);
                    splice_two_point(s, u, c1, c2)
                };
                if (MIN_SERIES_LEN..=max_len).contains(&child.len()) {
                    return Shapelet::from_vec_unchecked(child);
                }
            }
            s.clone()
        })
        .collect();
    ShapeletSet::new(shapelets)
}

/// Point crossover on the values of individual shapelets: every shapelet of
/// `a` is spliced with a random partner from `b`, and vice versa.
pub fn crossover_shapelet_point<R: Rng + ?Sized>(
    a: &ShapeletSet,
    b: &ShapeletSet,
    max_len: usize,
    rng: &mut R,
) -> (ShapeletSet, ShapeletSet) {
    let x = splice_pass(a, b, max_len, rng);
    let y = splice_pass(b, a, max_len, rng);
    (x, y)
}

/// Elementwise mean of two shapelets. When lengths differ, the shorter one
/// is averaged with the window of the longer starting at `offset`.
pub fn merge_shapelets(s: &[f64], u: &[f64], offset: usize) -> Vec<f64> {
    let (short, long) = if s.len() <= u.len() { (s, u) } else { (u, s) };
    short
        .iter()
        .zip(&long[offset..offset + short.len()])
        .map(|(x, y)| (x + y) / 2.0)
        .collect()
}

fn merge_pass<R: Rng + ?Sized>(from: &ShapeletSet, partners: &ShapeletSet, rng: &mut R) -> ShapeletSet {
    let shapelets = from
        .iter()
        .map(|s| {
            let u = &partners.shapelets[rng.random_range(0..partners.len())];
            let offset = rng.random_range(0..=s.len().abs_diff(u.len()));
            Shapelet::from_vec_unchecked(merge_shapelets(s, u, offset))
        })
        .collect();
    ShapeletSet::new(shapelets)
}

/// Merges every shapelet of `a` with a random partner from `b` (and vice
/// versa) by averaging.
pub fn crossover_merge<R: Rng + ?Sized>(a: &ShapeletSet, b: &ShapeletSet, rng: &mut R) -> (ShapeletSet, ShapeletSet) {
    let x = merge_pass(a, b, rng);
    let y = merge_pass(b, a, rng);
    (x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shp(v: &[f64]) -> Shapelet {
        Shapelet::new(v.to_vec()).unwrap()
    }

    fn set(ids: &[f64]) -> ShapeletSet {
        ShapeletSet::new(ids.iter().map(|&i| shp(&[i; 4])).collect())
    }

    fn ids(s: &ShapeletSet) -> Vec<f64> {
        s.iter().map(|x| x[0]).collect()
    }

    #[test]
    fn one_point_layout() {
        let a = [1, 2, 3, 4];
        let b = [11, 12, 13, 14];
        let (x, y) = one_point_sets(&a, &b, 2, 2);
        assert_eq!(x, vec![1, 2, 13, 14]);
        assert_eq!(y, vec![11, 12, 3, 4]);
        let (x, y) = two_point_sets(&a, &b, (1, 3), (1, 3));
        assert_eq!(x, vec![1, 12, 13, 4]);
        assert_eq!(y, vec![11, 2, 3, 14]);
    }

    #[test]
    fn singleton_sets_swap_or_stay() {
        let a = set(&[1.0]);
        let b = set(&[2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let (x, y) = crossover_set_point(&a, &b, usize::MAX, &mut rng);
            let mut pair = [ids(&x), ids(&y)];
            pair.sort_by(|p, q| p[0].total_cmp(&q[0]));
            assert_eq!(pair, [vec![1.0], vec![2.0]]);
        }
    }

    #[test]
    fn cap_limits_children() {
        let a = set(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let b = set(&[6.0, 7.0, 8.0, 9.0, 10.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let (x, y) = crossover_set_point(&a, &b, 5, &mut rng);
            assert!(x.len() <= 5 && y.len() <= 5);
        }
    }

    #[test]
    fn splice_examples() {
        assert_eq!(splice_one_point(&[0.0; 4], &[1.0; 4], 2), vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(splice_one_point(&[0.0; 4], &[1.0; 4], 0), vec![1.0; 4]);
        assert_eq!(splice_two_point(&[0.0; 6], &[1.0; 5], 1, 3), vec![0.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn merge_examples() {
        assert_eq!(merge_shapelets(&[0.0, 2.0, 4.0], &[2.0, 4.0, 6.0], 0), vec![1.0, 3.0, 5.0]);
        let long: Vec<f64> = (0..10).map(f64::from).collect();
        let short = [0.0; 4];
        assert_eq!(merge_shapelets(&short, &long, 6), vec![3.0, 3.5, 4.0, 4.5]);
        assert_eq!(merge_shapelets(&long, &short, 0), vec![0.0, 0.5, 1.0, 1.5]);
        assert_eq!(merge_shapelets(&[1.5, -2.0, 3.0, 4.0], &[1.5, -2.0, 3.0, 4.0], 0), vec![1.5, -2.0, 3.0, 4.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = ShapeletSet::new(vec![shp(&[0.0; 4])]);
        let b = ShapeletSet::new(vec![shp(&long)]);
        let mut offsets = std::collections::BTreeSet::new();
        for _ in 0..500 {
            let (x, y) = crossover_merge(&a, &b, &mut rng);
            assert_eq!(x.shapelets[0].len(), 4);
            assert_eq!(y.shapelets[0].len(), 4);
            offsets.insert((x.shapelets[0][0] * 2.0) as usize);
        }
        assert_eq!(offsets.into_iter().collect::<Vec<_>>(), (0..=6).collect::<Vec<_>>());
    }

    fn arb_set() -> impl Strategy<Value = ShapeletSet> {
        prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 4..12), 1..6)
            .prop_map(|v| ShapeletSet::new(v.into_iter().map(|s| Shapelet::new(s).unwrap()).collect()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn set_crossover_preserves_multiset(a in arb_set(), b in arb_set(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, y) = crossover_set_point(&a, &b, usize::MAX, &mut rng);
            prop_assert!(!x.is_empty() && !y.is_empty());
            let key = |s: &Shapelet| s.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            let mut before: Vec<_> = a.iter().chain(b.iter()).map(key).collect();
            let mut after: Vec<_> = x.iter().chain(y.iter()).map(key).collect();
            before.sort();
            after.sort();
            prop_assert_eq!(before, after);
        }

        #[test]
        fn shapelet_crossover_lengths_stay_valid(a in arb_set(), b in arb_set(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (x, y) = crossover_shapelet_point(&a, &b, 11, &mut rng);
            prop_assert_eq!(x.len(), a.len());
            prop_assert_eq!(y.len(), b.len());
            prop_assert!(x.iter().chain(y.iter()).all(|s| (4..=11).contains(&s.len())));
        }
    }
}
