//! Sliding-window shapelet distances and dynamic time warping.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, TimeSeries, MIN_SERIES_LEN};
use crate::error::{Error, Result};

/// A candidate subsequence. Values need not occur in any series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Shapelet(Vec<f64>);

impl Shapelet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_SERIES_LEN {
            return Err(Error::InvalidShapelet(format!(
                "length {} is below the minimum of {MIN_SERIES_LEN}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidShapelet("non-finite value".into()));
        }
        Ok(Shapelet(values))
    }

    /// Wraps values without the length check. Operators that already
    /// guarantee the bounds use this.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.len() >= MIN_SERIES_LEN);
        Shapelet(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for Shapelet {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Minimum length-normalized Euclidean distance between `shapelet` and
/// every window of `series` with the same length:
/// `min_w sqrt(sum_i (s_i - w_i)^2 / |s|)`.
pub fn subsequence_distance(shapelet: &[f64], series: &[f64]) -> Result<f64> {
    let len = shapelet.len();
    if len == 0 || len > series.len() {
        return Err(Error::ShapeletTooLong {
            shapelet_len: len,
            series_len: series.len(),
        });
    }
    let mut best = f64::INFINITY;
    for window in series.windows(len) {
        let mut sum = 0.0;
        for (a, b) in shapelet.iter().zip(window) {
            let d = a - b;
            sum += d * d;
        }
        if sum < best {
            best = sum;
        }
    }
    Ok((best / len as f64).sqrt())
}

/// Row-major N x K matrix of shapelet distances; row i is series i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::ShapeMismatch("ragged distance rows".into()));
        }
        Ok(DistanceMatrix {
            n_rows,
            n_cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_flat(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {n_rows}x{n_cols} matrix",
                data.len()
            )));
        }
        Ok(DistanceMatrix { n_rows, n_cols, data })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks(0) panics, so an empty-column matrix yields no rows.
        self.data.chunks(self.n_cols.max(1)).take(self.n_rows)
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).map(|r| self.get(r, col)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Keeps only the given rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> DistanceMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        DistanceMatrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            data,
        }
    }

    /// CSV with a `shapelet_0..shapelet_{K-1}` header and one line per series.
    pub fn to_csv(&self) -> String {
        let mut out = (0..self.n_cols)
            .map(|j| format!("shapelet_{j}"))
            .collect::<Vec<_>>()
            .join(",");
        out.push('\n');
        for row in self.rows() {
            let line = row.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",");
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

fn check_lengths(shapelets: &[Shapelet], series: &[TimeSeries]) -> Result<()> {
    let min_len = series.iter().map(TimeSeries::len).min().unwrap_or(0);
    if let Some(s) = shapelets.iter().find(|s| s.len() > min_len) {
        return Err(Error::ShapeletTooLong {
            shapelet_len: s.len(),
            series_len: min_len,
        });
    }
    Ok(())
}

/// Distances of every series to every shapelet. Rows are computed in
/// parallel on the current rayon pool; every entry is produced by
/// [`subsequence_distance`], so the result does not depend on the pool size.
pub fn distance_matrix(shapelets: &[Shapelet], dataset: &Dataset) -> Result<DistanceMatrix> {
    series_distance_matrix(shapelets, dataset.series())
}

pub fn series_distance_matrix(shapelets: &[Shapelet], series: &[TimeSeries]) -> Result<DistanceMatrix> {
    check_lengths(shapelets, series)?;
    let n_cols = shapelets.len();
    let mut data = vec![0.0; series.len() * n_cols];
    if n_cols > 0 {
        data.par_chunks_mut(n_cols)
            .zip(series.par_iter())
            .try_for_each(|(row, t)| -> Result<()> {
                for (cell, s) in row.iter_mut().zip(shapelets) {
                    *cell = subsequence_distance(s, t)?;
                }
                Ok(())
            })?;
    }
    DistanceMatrix::from_flat(series.len(), n_cols, data)
}

/// Sequential variant used inside already-parallel fitness evaluation.
pub fn distance_matrix_sequential(shapelets: &[Shapelet], series: &[TimeSeries]) -> Result<DistanceMatrix> {
    check_lengths(shapelets, series)?;
    let mut data = Vec::with_capacity(series.len() * shapelets.len());
    for t in series {
        for s in shapelets {
            data.push(subsequence_distance(s, t)?);
        }
    }
    DistanceMatrix::from_flat(series.len(), shapelets.len(), data)
}

/// Unconstrained DTW with squared point cost; returns the square root of
/// the accumulated cost of the optimal warping path.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.len() == b.len() { 0.0 } else { f64::INFINITY };
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &x in a {
        curr[0] = f64::INFINITY;
        for j in 1..=m {
            let d = x - b[j - 1];
            let best = prev[j - 1].min(prev[j]).min(curr[j - 1]);
            curr[j] = d * d + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[m].sqrt()
}

/// |A| x |B| matrix of DTW distances, row-major as nested vectors.
pub fn pairwise_dtw(a: &[Shapelet], b: &[Shapelet]) -> Vec<Vec<f64>> {
    a.iter()
        .map(|x| b.iter().map(|y| dtw_distance(x, y)).collect())
        .collect()
}
