//! Exhaustive single-candidate shapelet search ranked by information gain.
//!
//! Used as a correctness oracle for the genetic search and as the naive
//! "score candidates independently, keep the top k" comparison method.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, MIN_SERIES_LEN};
use crate::distance::{subsequence_distance, Shapelet};
use crate::error::{Error, Result};

/// Shannon entropy (bits) of a label histogram.
pub fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Best distance threshold for separating `labels` by `distances`.
///
/// Candidate thresholds are midpoints between consecutive distinct sorted
/// distances. Ties in gain go to the split most balanced in counts, then to
/// the smaller threshold. With no candidate the gain is 0 and the
/// threshold is the common distance.
pub fn information_gain_split(distances: &[f64], labels: &[usize]) -> (f64, f64) {
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));

    let mut total = vec![0usize; n_classes];
    for &y in labels {
        total[y] += 1;
    }
    let parent = entropy(&total);
    let n = labels.len();

    let mut left = vec![0usize; n_classes];
    let mut best: Option<(f64, usize, f64)> = None; // (gain, imbalance, threshold)
    for pos in 0..n.saturating_sub(1) {
        left[labels[order[pos]]] += 1;
        let here = distances[order[pos]];
        let next = distances[order[pos + 1]];
        if here == next {
            continue;
        }
        let n_left = pos + 1;
        let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
        let weighted = (n_left as f64 * entropy(&left) + (n - n_left) as f64 * entropy(&right)) / n as f64;
        let gain = (parent - weighted).max(0.0);
        let imbalance = n_left.abs_diff(n - n_left);
        let threshold = here + (next - here) / 2.0;
        let better = match best {
            None => true,
            Some((g, imb, _)) => gain > g || (gain == g && imbalance < imb),
        };
        if better {
            best = Some((gain, imbalance, threshold));
        }
    }
    match best {
        Some((gain, _, threshold)) => (threshold, gain),
        None => (distances.first().copied().unwrap_or(0.0), 0.0),
    }
}

/// One scored window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub shapelet: Shapelet,
    pub gain: f64,
    pub threshold: f64,
    pub series: usize,
    pub offset: usize,
}

impl CandidateScore {
    /// Number of training series on the minority side of the best split's
    /// class assignment: each side is labeled with its majority class.
    pub fn split_errors(&self, dataset: &Dataset) -> Result<usize> {
        let d = dataset
            .series()
            .iter()
            .map(|t| subsequence_distance(&self.shapelet, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(threshold_errors(&d, dataset.labels(), self.threshold))
    }
}

/// Misclassifications when both sides of `threshold` predict their
/// majority label.
pub fn threshold_errors(distances: &[f64], labels: &[usize], threshold: f64) -> usize {
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut below = vec![0usize; n_classes];
    let mut above = vec![0usize; n_classes];
    for (&d, &y) in distances.iter().zip(labels) {
        if d <= threshold {
            below[y] += 1;
        } else {
            above[y] += 1;
        }
    }
    let errors = |side: &[usize]| side.iter().sum::<usize>() - side.iter().copied().max().unwrap_or(0);
    errors(&below) + errors(&above)
}

/// Fewest misclassifications achievable by any single threshold on
/// `distances`, trying every cut and both class orientations (two classes).
pub fn best_threshold_errors(distances: &[f64], labels: &[usize]) -> usize {
    let mut sorted: Vec<f64> = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut cuts = vec![f64::NEG_INFINITY];
    cuts.extend(sorted.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    cuts.push(f64::INFINITY);
    cuts.iter()
        .map(|&t| threshold_errors(distances, labels, t))
        .min()
        .unwrap_or(0)
}

fn enumerate_candidates(dataset: &Dataset, lengths: &[usize]) -> Result<Vec<(usize, usize, usize)>> {
    let m = dataset.min_len();
    let mut lengths: Vec<usize> = lengths.to_vec();
    lengths.sort_unstable();
    lengths.dedup();
    if let Some(&bad) = lengths.iter().find(|&&l| l < MIN_SERIES_LEN || l > m) {
        return Err(Error::InvalidConfig(format!(
            "candidate length {bad} outside [{MIN_SERIES_LEN}, {m}]"
        )));
    }
    let mut out = Vec::new();
    for (si, series) in dataset.series().iter().enumerate() {
        for &len in &lengths {
            for offset in 0..=series.len() - len {
                out.push((si, len, offset));
            }
        }
    }
    Ok(out)
}

/// Scores every window of every series at each requested length. Returned
/// in ranking order: gain descending, then shorter, then enumeration
/// order (series, length, offset).
pub fn score_all_candidates(dataset: &Dataset, lengths: &[usize]) -> Result<Vec<CandidateScore>> {
    let candidates = enumerate_candidates(dataset, lengths)?;
    let mut scored: Vec<(usize, CandidateScore)> = candidates
        .par_iter()
        .enumerate()
        .map(|(rank, &(si, len, offset))| {
            let values = dataset.series()[si].values()[offset..offset + len].to_vec();
            let distances = dataset
                .series()
                .iter()
                .map(|t| subsequence_distance(&values, t))
                .collect::<Result<Vec<_>>>()?;
            let (threshold, gain) = information_gain_split(&distances, dataset.labels());
            Ok((
                rank,
                CandidateScore {
                    shapelet: Shapelet::from_vec_unchecked(values),
                    gain,
                    threshold,
                    series: si,
                    offset,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|(ra, a), (rb, b)| {
        b.gain
            .partial_cmp(&a.gain)
            .unwrap_or(Ordering::Equal)
            .then(a.shapelet.len().cmp(&b.shapelet.len()))
            .then(ra.cmp(rb))
    });
    Ok(scored.into_iter().map(|(_, c)| c).collect())
}

/// The highest-gain window over all requested lengths.
pub fn brute_force_best_shapelet(dataset: &Dataset, lengths: &[usize]) -> Result<CandidateScore> {
    score_all_candidates(dataset, lengths)?
        .into_iter()
        .next()
        .ok_or(Error::InsufficientCandidates { requested: 1, found: 0 })
}

/// The `k` highest-gain windows, with no check for redundancy among them.
pub fn top_k_independent(dataset: &Dataset, k: usize, lengths: &[usize]) -> Result<Vec<CandidateScore>> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    let all = score_all_candidates(dataset, lengths)?;
    if all.len() < k {
        return Err(Error::InsufficientCandidates {
            requested: k,
            found: all.len(),
        });
    }
    Ok(all.into_iter().take(k).collect())
}

/// Every admissible length `4..=M`.
pub fn all_lengths(dataset: &Dataset) -> Vec<usize> {
    (MIN_SERIES_LEN..=dataset.min_len()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_split() {
        let (t, g) = information_gain_split(&[0.0, 0.0, 1.0, 1.0], &[0, 0, 1, 1]);
        assert_eq!(t, 0.5);
        assert_abs_diff_eq!(g, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_distances_have_no_gain() {
        let (_, g) = information_gain_split(&[2.0; 5], &[0, 1, 0, 1, 1]);
        assert_eq!(g, 0.0);
    }

    #[test]
    fn alternating_labels_enumerated() {
        // midpoints 0.5, 1.5, 2.5 on labels [0,1,0,1]:
        //   0.5: {0} | {1,0,1}  -> 1 - 3/4 * H(1/3) = 0.311278
        //   1.5: {0,1} | {0,1} -> 0
        //   2.5: {0,1,0} | {1} -> same as 0.5 (mirror), equally unbalanced
        let h13 = -(1.0f64 / 3.0) * (1.0f64 / 3.0).log2() - (2.0f64 / 3.0) * (2.0f64 / 3.0).log2();
        let expected = 1.0 - 0.75 * h13;
        let (t, g) = information_gain_split(&[0.0, 1.0, 2.0, 3.0], &[0, 1, 0, 1]);
        assert_abs_diff_eq!(g, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(g, 0.311278, epsilon = 1e-6);
        assert_eq!(t, 0.5);
    }

    #[test]
    fn balance_breaks_gain_ties() {
        // {0}|{0,1,1,1} and {0,0}|{1,1,1}... only the second is perfect; make
        // two perfect splits impossible and two equal-gain splits differ in balance
        let (t, _) = information_gain_split(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], &[0, 1, 1, 1, 1, 0]);
        // splits at 0.5 and 4.5 mirror each other; both equally unbalanced, smaller threshold wins
        assert_eq!(t, 0.5);
    }

    fn motif_dataset() -> Dataset {
        let motif = [4.0, -4.0, 4.0, -4.0];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..8 {
            let mut r: Vec<f64> = (0..14).map(|_| rng.random_range(-0.5..0.5)).collect();
            if i % 2 == 1 {
                let at = rng.random_range(0..10);
                r[at..at + 4].copy_from_slice(&motif);
            }
            rows.push(r);
            labels.push(i % 2);
        }
        Dataset::from_rows(rows, labels, 2).unwrap()
    }

    #[test]
    fn planted_motif_reaches_full_entropy() {
        let ds = motif_dataset();
        let best = brute_force_best_shapelet(&ds, &[4, 5, 6]).unwrap();
        assert_abs_diff_eq!(best.gain, entropy(&ds.class_counts()), epsilon = 1e-12);
        assert_eq!(best.split_errors(&ds).unwrap(), 0);
    }

    #[test]
    fn enumeration_count() {
        let ds = Dataset::from_rows(vec![vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], vec![5.0; 6]], vec![0, 1], 2).unwrap();
        for len in 4..=6 {
            assert_eq!(score_all_candidates(&ds, &[len]).unwrap().len(), 2 * (6 - len + 1));
        }
        assert!(score_all_candidates(&ds, &[7]).is_err());
    }

    #[test]
    fn top_one_is_the_brute_force_winner() {
        let ds = motif_dataset();
        let best = brute_force_best_shapelet(&ds, &[4, 5]).unwrap();
        let top = top_k_independent(&ds, 3, &[4, 5]).unwrap();
        assert_eq!(top.len(), 3);
        assert_eq!(top[0], best);
        assert!(matches!(
            top_k_independent(&ds, 10_000, &[4]),
            Err(Error::InsufficientCandidates { .. })
        ));
    }

    #[test]
    fn best_beats_random_candidates() {
        let ds = motif_dataset();
        let lengths = [4, 6, 8];
        let best = brute_force_best_shapelet(&ds, &lengths).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let len = lengths[rng.random_range(0..3)];
            let t = &ds.series()[rng.random_range(0..ds.len())];
            let off = rng.random_range(0..=t.len() - len);
            let d: Vec<f64> = ds.series().iter().map(|u| subsequence_distance(&t[off..off + len], u).unwrap()).collect();
            let (_, g) = information_gain_split(&d, ds.labels());
            assert!(best.gain >= g);
        }
    }

    #[test]
    fn gain_is_bounded_by_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let n = rng.random_range(2..12);
            let d: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
            let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let mut counts = vec![0; 3];
            y.iter().for_each(|&c| counts[c] += 1);
            let (_, g) = information_gain_split(&d, &y);
            assert!(g >= 0.0 && g <= entropy(&counts) + 1e-12);
        }
    }
}
