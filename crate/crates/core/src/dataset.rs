//! Labeled time-series collections and the UCR-style delimited text format.
//!
//! Each line of a delimited file holds one series: a class label followed
//! (or preceded) by the sample values. Raw integer labels are remapped to
//! contiguous indices `0..C` in ascending order of the distinct raw values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Shortest series (and shapelet) length the engine works with.
pub const MIN_SERIES_LEN: usize = 4;

/// A univariate series of finite samples, at least [`MIN_SERIES_LEN`] long.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries(Vec<f64>);

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_SERIES_LEN {
            return Err(Error::InvalidDataset(format!(
                "series has {} values, need at least {MIN_SERIES_LEN}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!("non-finite value {v}")));
        }
        Ok(TimeSeries(values))
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

    /// Rescales to zero mean and unit variance. Constant series become all zeros.
    pub fn z_normalized(&self) -> TimeSeries {
        let n = self.0.len() as f64;
        let mean = self.0.iter().sum::<f64>() / n;
        let var = self.0.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if std < 1e-12 {
            return TimeSeries(vec![0.0; self.0.len()]);
        }
        TimeSeries(self.0.iter().map(|v| (v - mean) / std).collect())
    }
}

impl std::ops::Deref for TimeSeries {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Where the class label sits on each line of a delimited file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelPosition {
    #[default]
    First,
    Last,
}

impl std::str::FromStr for LabelPosition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "first" => Ok(LabelPosition::First),
            "last" => Ok(LabelPosition::Last),
            other => Err(Error::InvalidConfig(format!(
                "label position must be 'first' or 'last', got '{other}'"
            ))),
        }
    }
}

/// N labeled series with labels in `0..n_classes`, every class present.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    series: Vec<TimeSeries>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl Dataset {
    pub fn new(series: Vec<TimeSeries>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if series.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} series but {} labels",
                series.len(),
                labels.len()
            )));
        }
        if series.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 series, got {}",
                series.len()
            )));
        }
        let mut seen = vec![false; n_classes];
        for &y in &labels {
            if y >= n_classes {
                return Err(Error::InvalidDataset(format!(
                    "label {y} out of range for {n_classes} classes"
                )));
            }
            seen[y] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidDataset(format!("class {missing} has no series")));
        }
        Ok(Dataset {
            series,
            labels,
            n_classes,
        })
    }

    /// Builds a dataset from raw rows, validating every series.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let series = rows
            .into_iter()
            .map(TimeSeries::new)
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(series, labels, n_classes)
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    /// Length of the shortest series; bounds every shapelet length.
    pub fn min_len(&self) -> usize {
        self.series.iter().map(TimeSeries::len).min().unwrap_or(0)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    pub fn z_normalized(&self) -> Dataset {
        Dataset {
            series: self.series.iter().map(TimeSeries::z_normalized).collect(),
            labels: self.labels.clone(),
            n_classes: self.n_classes,
        }
    }

    /// Rows at the given indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let series = indices.iter().map(|&i| self.series[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Dataset::new(series, labels, self.n_classes)
    }

    /// Hex SHA-256 over labels and the exact bit patterns of every value.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n_classes as u64).to_le_bytes());
        for (s, &y) in self.series.iter().zip(&self.labels) {
            hasher.update((y as u64).to_le_bytes());
            hasher.update((s.len() as u64).to_le_bytes());
            for v in s.values() {
                hasher.update(v.to_bits().to_le_bytes());
            }
        }
        hasher
            .finalize()
            .iter()
            .fold(String::with_capacity(64), |mut out, b| {
                let _ = write!(out, "{b:02x}");
                out
            })
    }
}

fn split_fields(line: &str, delimiter: char) -> Vec<&str> {
    if delimiter.is_whitespace() {
        line.split_whitespace().collect()
    } else {
        line.split(delimiter).map(str::trim).collect()
    }
}

fn parse_label(field: &str, line: usize) -> Result<i64> {
    if let Ok(v) = field.parse::<i64>() {
        return Ok(v);
    }
    // UCR files sometimes store labels as "1.0000000e+00".
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15 => Ok(v as i64),
        _ => Err(Error::Parse {
            line,
            message: format!("label '{field}' is not an integer"),
        }),
    }
}

fn parse_raw(text: &str, delimiter: char, label_position: LabelPosition) -> Result<(Vec<Vec<f64>>, Vec<i64>)> {
    let mut raw_labels = Vec::new();
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_fields(line, delimiter);
        if fields.len() < MIN_SERIES_LEN + 1 {
            return Err(Error::Parse {
                line: lineno,
                message: format!(
                    "row has {} fields, need a label and at least {MIN_SERIES_LEN} values",
                    fields.len()
                ),
            });
        }
        let (label_field, value_fields) = match label_position {
            LabelPosition::First => (fields[0], &fields[1..]),
            LabelPosition::Last => (fields[fields.len() - 1], &fields[..fields.len() - 1]),
        };
        raw_labels.push(parse_label(label_field, lineno)?);
        let values = value_fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line: lineno,
                        message: format!("value '{f}' is not a finite number"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile);
    }
    Ok((rows, raw_labels))
}

fn label_mapping(raw_labels: &[i64]) -> BTreeMap<i64, usize> {
    raw_labels
        .iter()
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(idx, raw)| (raw, idx))
        .collect()
}

/// Parses delimited text. Blank lines are skipped.
pub fn parse_delimited(text: &str, delimiter: char, label_position: LabelPosition) -> Result<Dataset> {
    let (rows, raw_labels) = parse_raw(text, delimiter, label_position)?;
    let mapping = label_mapping(&raw_labels);
    let labels = raw_labels.iter().map(|raw| mapping[raw]).collect();
    Dataset::from_rows(rows, labels, mapping.len())
}

/// Parses a train/test pair with one label mapping, taken from the
/// training labels. A test label unseen in training is an error.
pub fn parse_train_test(
    train: &str,
    test: &str,
    delimiter: char,
    label_position: LabelPosition,
) -> Result<(Dataset, Dataset)> {
    let (train_rows, train_raw) = parse_raw(train, delimiter, label_position)?;
    let (test_rows, test_raw) = parse_raw(test, delimiter, label_position)?;
    let mapping = label_mapping(&train_raw);
    let map = |raw: &[i64]| -> Result<Vec<usize>> {
        raw.iter()
            .map(|r| {
                mapping
                    .get(r)
                    .copied()
                    .ok_or_else(|| Error::IncompatibleDatasets(format!("test label {r} does not occur in training")))
            })
            .collect()
    };
    let train_labels = map(&train_raw)?;
    let test_labels = map(&test_raw)?;
    let n = mapping.len();
    Ok((
        Dataset::from_rows(train_rows, train_labels, n)?,
        Dataset::from_rows(test_rows, test_labels, n)?,
    ))
}

pub fn load_train_test(
    train: impl AsRef<Path>,
    test: impl AsRef<Path>,
    delimiter: char,
    label_position: LabelPosition,
) -> Result<(Dataset, Dataset)> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
    parse_train_test(&read(train.as_ref())?, &read(test.as_ref())?, delimiter, label_position)
}

pub fn load_delimited(
    path: impl AsRef<Path>,
    delimiter: char,
    label_position: LabelPosition,
) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_delimited(&text, delimiter, label_position)
}

/// Writes one line per series, label first. Values use the shortest
/// representation that parses back to the identical `f64`.
pub fn write_delimited<W: Write>(dataset: &Dataset, out: &mut W, delimiter: char) -> std::io::Result<()> {
    for (s, y) in dataset.series.iter().zip(&dataset.labels) {
        let mut line = y.to_string();
        for v in s.values() {
            line.push(delimiter);
            let _ = write!(line, "{v:?}");
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn save_delimited(dataset: &Dataset, path: impl AsRef<Path>, delimiter: char) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_delimited(dataset, &mut buf, delimiter).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Pools train and test, shuffles, and re-partitions so that each class
/// keeps exactly its original train/test counts.
pub fn stratified_resplit<R: Rng + ?Sized>(
    train: &Dataset,
    test: &Dataset,
    rng: &mut R,
) -> Result<(Dataset, Dataset)> {
    if train.n_classes != test.n_classes {
        return Err(Error::IncompatibleDatasets(format!(
            "train has {} classes, test has {}",
            train.n_classes, test.n_classes
        )));
    }
    let mut pool: Vec<(TimeSeries, usize)> = train
        .series
        .iter()
        .cloned()
        .zip(train.labels.iter().copied())
        .chain(test.series.iter().cloned().zip(test.labels.iter().copied()))
        .collect();
    pool.shuffle(rng);

    let mut quota = train.class_counts();
    let (mut tr_series, mut tr_labels) = (Vec::new(), Vec::new());
    let (mut te_series, mut te_labels) = (Vec::new(), Vec::new());
    for (s, y) in pool {
        if quota[y] > 0 {
            quota[y] -= 1;
            tr_series.push(s);
            tr_labels.push(y);
        } else {
            te_series.push(s);
            te_labels.push(y);
        }
    }
    Ok((
        Dataset::new(tr_series, tr_labels, train.n_classes)?,
        Dataset::new(te_series, te_labels, test.n_classes)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_row_file_remaps_labels() {
        let ds = parse_delimited("1,0.0,1.0,2.0,3.0\n2,3.0,2.0,1.0,0.0", ',', LabelPosition::First).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.n_classes(), 2);
        assert_eq!(ds.labels(), &[0, 1]);
        assert_eq!(ds.series()[1].values(), &[3.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn non_numeric_row_is_a_parse_error() {
        let err = parse_delimited("1,a,b", ',', LabelPosition::First).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = parse_delimited("1,0,1,2,x\n", ',', LabelPosition::First).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(
            parse_delimited("\n\n", ',', LabelPosition::First),
            Err(Error::EmptyFile)
        ));
    }

    #[test]
    fn negative_and_float_labels_keep_sort_order() {
        let text = "1,0,0,0,0\n-1,1,1,1,1\n1.0e0,2,2,2,2\n";
        let ds = parse_delimited(text, ',', LabelPosition::First).unwrap();
        assert_eq!(ds.labels(), &[1, 0, 1]);
    }

    #[test]
    fn label_last_and_tab_delimiter() {
        let text = "0.5\t1\t2\t3\t7\n4\t3\t2\t1\t3\n";
        let ds = parse_delimited(text, '\t', LabelPosition::Last).unwrap();
        assert_eq!(ds.labels(), &[1, 0]);
        assert_eq!(ds.series()[0].values(), &[0.5, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn variable_length_rows_are_kept() {
        let ds = parse_delimited("0,1,2,3,4,5,6\n1,1,2,3,4\n", ',', LabelPosition::First).unwrap();
        assert_eq!(ds.series()[0].len(), 6);
        assert_eq!(ds.min_len(), 4);
    }

    #[test]
    fn train_test_share_one_mapping() {
        let (tr, te) = parse_train_test("3,1,2,3,4\n7,1,2,3,4\n", "7,0,0,0,0\n3,1,1,1,1\n", ',', LabelPosition::First).unwrap();
        assert_eq!(tr.labels(), &[0, 1]);
        assert_eq!(te.labels(), &[1, 0]);
        let unseen = parse_train_test("3,1,2,3,4\n7,1,2,3,4\n", "9,0,0,0,0\n3,1,1,1,1\n", ',', LabelPosition::First);
        assert!(matches!(unseen, Err(Error::IncompatibleDatasets(_))));
    }

    #[test]
    fn missing_class_is_invalid() {
        let rows = vec![vec![0.0; 4], vec![1.0; 4]];
        assert!(Dataset::from_rows(rows, vec![0, 0], 2).is_err());
    }

    #[test]
    fn resplit_preserves_class_counts() {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..15 {
            rows.push(vec![i as f64; 4]);
            labels.push(usize::from(i >= 10));
        }
        let train = Dataset::from_rows(rows, labels, 2).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..6 {
            rows.push(vec![100.0 + i as f64; 4]);
            labels.push(usize::from(i >= 4));
        }
        let test = Dataset::from_rows(rows, labels, 2).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (tr, te) = stratified_resplit(&train, &test, &mut rng).unwrap();
        assert_eq!(tr.class_counts(), vec![10, 5]);
        assert_eq!(te.class_counts(), vec![4, 2]);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let again = stratified_resplit(&train, &test, &mut rng).unwrap();
        assert_eq!((tr.clone(), te.clone()), again);

        let key = |d: &Dataset| -> Vec<(Vec<u64>, usize)> {
            d.series()
                .iter()
                .zip(d.labels())
                .map(|(s, &y)| (s.values().iter().map(|v| v.to_bits()).collect(), y))
                .collect()
        };
        let mut before = [key(&train), key(&test)].concat();
        let mut after = [key(&tr), key(&te)].concat();
        before.sort();
        after.sort();
        assert_eq!(before, after);
    }

    #[test]
    fn resplit_rejects_class_mismatch() {
        let a = Dataset::from_rows(vec![vec![0.0; 4], vec![1.0; 4]], vec![0, 1], 2).unwrap();
        let b = Dataset::from_rows(vec![vec![0.0; 4], vec![1.0; 4], vec![2.0; 4]], vec![0, 1, 2], 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            stratified_resplit(&a, &b, &mut rng),
            Err(Error::IncompatibleDatasets(_))
        ));
    }

    #[test]
    fn z_normalization_of_constant_series_is_zero() {
        let s = TimeSeries::new(vec![3.0; 5]).unwrap().z_normalized();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }
}
