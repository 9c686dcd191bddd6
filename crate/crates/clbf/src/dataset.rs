//! Labeled key/non-key datasets: synthetic generators, CSV ingestion for
//! pre-featurized data, and deterministic splits.
//!
//! Generators are pure functions of their parameters and a seed. Every
//! sample draws from its own SplitMix64 substream (see [`crate::rng`]),
//! filling dimensions row-major, so regeneration is bit-identical and
//! order-independent. Identity bytes are the canonical text of the feature
//! vector at 9 significant digits, and key/non-key identity sets must be
//! disjoint.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::{substream, SplitMix64};
use crate::scalar::Scalar;

/// Substream tags for dataset generation.
mod tag {
    pub const KEY_SAMPLE: u64 = 0;
    pub const NONKEY_SAMPLE: u64 = 1;
    pub const KEY_CENTER: u64 = 2;
    pub const NONKEY_CENTER: u64 = 3;
    pub const SPLIT_SHUFFLE: u64 = 4;
}

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    data: Vec<T>,
    rows: usize,
    cols: usize,
}

impl<T: Scalar> Matrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>, cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        let n = rows.len();
        for row in rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Matrix { data, rows: n, cols })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            data: vec![T::zero(); rows * cols],
            rows,
            cols,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    /// New matrix holding the selected rows, in order.
    pub fn select(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            data,
            rows: idx.len(),
            cols: self.cols,
        }
    }
}

/// Canonical identity bytes for a feature row: each value formatted with
/// 9 significant digits in scientific notation, joined by commas.
pub fn canonical_identity<T: Scalar>(row: &[T]) -> Vec<u8> {
    let mut s = String::with_capacity(row.len() * 18);
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{:.8e}", v).expect("write to String");
    }
    s.into_bytes()
}

/// Keys (stored set) and non-keys (query set) with precomputed identities.
#[derive(Debug, Clone)]
pub struct LabeledDataset<T> {
    pub keys: Matrix<T>,
    pub nonkeys: Matrix<T>,
    key_ids: Vec<Vec<u8>>,
    nonkey_ids: Vec<Vec<u8>>,
    pub dim: usize,
    pub seed: u64,
}

impl<T: Scalar> LabeledDataset<T> {
    fn assemble(keys: Matrix<T>, nonkeys: Matrix<T>, seed: u64) -> Result<Self> {
        let dim = keys.cols();
        if nonkeys.cols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: nonkeys.cols(),
            });
        }
        let key_ids: Vec<Vec<u8>> = keys.iter_rows().map(canonical_identity).collect();
        let nonkey_ids: Vec<Vec<u8>> = nonkeys.iter_rows().map(canonical_identity).collect();
        let key_set: HashSet<&[u8]> = key_ids.iter().map(|v| v.as_slice()).collect();
        for (i, id) in nonkey_ids.iter().enumerate() {
            if key_set.contains(id.as_slice()) {
                return Err(Error::invalid(format!(
                    "non-key row {i} duplicates a key identity"
                )));
            }
        }
        Ok(LabeledDataset {
            keys,
            nonkeys,
            key_ids,
            nonkey_ids,
            dim,
            seed,
        })
    }

    pub fn num_keys(&self) -> usize {
        self.keys.rows()
    }

    pub fn num_nonkeys(&self) -> usize {
        self.nonkeys.rows()
    }

    pub fn key_identity(&self, i: usize) -> &[u8] {
        &self.key_ids[i]
    }

    pub fn nonkey_identity(&self, i: usize) -> &[u8] {
        &self.nonkey_ids[i]
    }

    pub fn key_identities(&self) -> &[Vec<u8>] {
        &self.key_ids
    }

    pub fn nonkey_identities(&self) -> &[Vec<u8>] {
        &self.nonkey_ids
    }

    /// All features i.i.d. Uniform[0, 1); key and non-key distributions are
    /// identical, so no model can separate them beyond chance.
    pub fn gen_random(n_keys: usize, n_nonkeys: usize, dim: usize, seed: u64) -> Result<Self> {
        check_counts(n_keys, n_nonkeys, dim)?;
        let keys = gen_population(n_keys, dim, seed, tag::KEY_SAMPLE, |rng, row| {
            for v in row.iter_mut() {
                *v = T::from_f64_lossy(rng.next_f64());
            }
        });
        let nonkeys = gen_population(n_nonkeys, dim, seed, tag::NONKEY_SAMPLE, |rng, row| {
            for v in row.iter_mut() {
                *v = T::from_f64_lossy(rng.next_f64());
            }
        });
        Self::assemble(keys, nonkeys, seed)
    }

    /// Keys ~ N(0, I), non-keys ~ N(delta*1, I); `delta` controls how
    /// separable the two populations are.
    pub fn gen_separation(
        delta: f64,
        n_keys: usize,
        n_nonkeys: usize,
        dim: usize,
        seed: u64,
    ) -> Result<Self> {
        check_counts(n_keys, n_nonkeys, dim)?;
        if delta < 0.0 {
            return Err(Error::invalid(format!("delta must be >= 0, got {delta}")));
        }
        let keys = gen_population(n_keys, dim, seed, tag::KEY_SAMPLE, |rng, row| {
            fill_gaussian_row(rng, row, |_| 0.0);
        });
        let nonkeys = gen_population(n_nonkeys, dim, seed, tag::NONKEY_SAMPLE, |rng, row| {
            fill_gaussian_row(rng, row, |_| delta);
        });
        Self::assemble(keys, nonkeys, seed)
    }

    /// `c` key clusters and `c` non-key clusters with unit-variance Gaussian
    /// samples around centers drawn Uniform[-10, 10) per dimension. Samples
    /// are split equally across clusters, remainder to the earliest ones.
    pub fn gen_clusters(
        c: usize,
        n_keys: usize,
        n_nonkeys: usize,
        dim: usize,
        seed: u64,
    ) -> Result<Self> {
        check_counts(n_keys, n_nonkeys, dim)?;
        if c < 1 {
            return Err(Error::invalid("cluster count must be >= 1"));
        }
        let key_centers = gen_centers(c, dim, seed, tag::KEY_CENTER);
        let nonkey_centers = gen_centers(c, dim, seed, tag::NONKEY_CENTER);
        let mut keys = Matrix::zeros(n_keys, dim);
        fill_cluster_population(&mut keys, &key_centers, c, seed, tag::KEY_SAMPLE);
        let mut nonkeys = Matrix::zeros(n_nonkeys, dim);
        fill_cluster_population(&mut nonkeys, &nonkey_centers, c, seed, tag::NONKEY_SAMPLE);
        Self::assemble(keys, nonkeys, seed)
    }

    /// Parse a CSV with numeric feature columns and one label column.
    /// Rows whose label equals `key_label` become keys.
    pub fn from_csv(path: &Path, label_column: &str, key_label: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text, label_column, key_label)
    }

    pub fn from_csv_str(text: &str, label_column: &str, key_label: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse {
                row: 0,
                column: 0,
                message: "empty file".into(),
            })?;
        let columns: Vec<&str> = header.split(',').map(str::trim).collect();
        let label_idx = columns
            .iter()
            .position(|c| *c == label_column)
            .ok_or_else(|| Error::Parse {
                row: 0,
                column: 0,
                message: format!("label column {label_column:?} not found in header"),
            })?;
        let dim = columns.len() - 1;
        if dim == 0 {
            return Err(Error::Parse {
                row: 0,
                column: 0,
                message: "no feature columns".into(),
            });
        }

        let mut key_rows: Vec<Vec<T>> = Vec::new();
        let mut nonkey_rows: Vec<Vec<T>> = Vec::new();
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != columns.len() {
                return Err(Error::Parse {
                    row: lineno,
                    column: 0,
                    message: format!(
                        "expected {} fields, found {}",
                        columns.len(),
                        fields.len()
                    ),
                });
            }
            let mut row = Vec::with_capacity(dim);
            for (col, field) in fields.iter().enumerate() {
                if col == label_idx {
                    continue;
                }
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    row: lineno,
                    column: col,
                    message: format!("non-numeric feature {field:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row: lineno,
                        column: col,
                        message: format!("non-finite feature {field:?}"),
                    });
                }
                row.push(T::from_f64_lossy(v));
            }
            if fields[label_idx] == key_label {
                key_rows.push(row);
            } else {
                nonkey_rows.push(row);
            }
        }
        if key_rows.is_empty() || nonkey_rows.is_empty() {
            return Err(Error::invalid(
                "dataset needs at least one key and one non-key row",
            ));
        }
        let keys = Matrix::from_rows(key_rows, dim)?;
        let nonkeys = Matrix::from_rows(nonkey_rows, dim)?;
        Self::assemble(keys, nonkeys, 0)
    }

    /// Write the dataset in the same schema `from_csv` reads:
    /// `f0..f{dim-1},label` with labels `key` / `nonkey`.
    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for i in 0..self.dim {
            write!(out, "f{i},").unwrap();
        }
        out.push_str("label\n");
        for row in self.keys.iter_rows() {
            for v in row {
                write!(out, "{:.8e},", v).unwrap();
            }
            out.push_str("key\n");
        }
        for row in self.nonkeys.iter_rows() {
            for v in row {
                write!(out, "{:.8e},", v).unwrap();
            }
            out.push_str("nonkey\n");
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Deterministic train/validation/test split.
    ///
    /// Non-keys are shuffled and divided by the given fractions (which must
    /// sum to 1). Key handling follows `policy`; with
    /// [`KeySplitPolicy::TrainAndValidation`] every key appears in both the
    /// train and validation outputs and never in the test output, so the
    /// test set measures false positives on unseen non-keys only.
    pub fn split(
        &self,
        train_frac: f64,
        val_frac: f64,
        test_frac: f64,
        seed: u64,
        policy: KeySplitPolicy,
    ) -> Result<SplitSets<T>> {
        let sum = train_frac + val_frac + test_frac;
        if !(sum - 1.0).abs().le(&1e-9) || train_frac < 0.0 || val_frac < 0.0 || test_frac < 0.0 {
            return Err(Error::invalid(format!(
                "split fractions must be non-negative and sum to 1, got {train_frac}/{val_frac}/{test_frac}"
            )));
        }
        let n = self.num_nonkeys();
        let mut order: Vec<usize> = (0..n).collect();
        substream(seed, tag::SPLIT_SHUFFLE, 0).shuffle(&mut order);
        let n_train = (train_frac * n as f64).floor() as usize;
        let n_val = (val_frac * n as f64).floor() as usize;
        let train_idx = &order[..n_train];
        let val_idx = &order[n_train..n_train + n_val];
        let test_idx = &order[n_train + n_val..];

        let (train_keys, val_keys) = match policy {
            KeySplitPolicy::TrainAndValidation => (self.keys.clone(), self.keys.clone()),
            KeySplitPolicy::FractionTrainAllValidation(frac) => {
                if !(0.0..=1.0).contains(&frac) {
                    return Err(Error::invalid("key train fraction must be in [0, 1]"));
                }
                let mut key_order: Vec<usize> = (0..self.num_keys()).collect();
                substream(seed, tag::SPLIT_SHUFFLE, 1).shuffle(&mut key_order);
                let take = (frac * self.num_keys() as f64).round() as usize;
                (self.keys.select(&key_order[..take]), self.keys.clone())
            }
        };

        Ok(SplitSets {
            train: PopulationPair {
                keys: train_keys,
                nonkeys: self.nonkeys.select(train_idx),
            },
            val: PopulationPair {
                keys: val_keys,
                nonkeys: self.nonkeys.select(val_idx),
            },
            test: PopulationPair {
                keys: Matrix::zeros(0, self.dim),
                nonkeys: self.nonkeys.select(test_idx),
            },
        })
    }
}

/// How keys are distributed across the train/validation outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KeySplitPolicy {
    /// All keys go to both train and validation (never to test).
    TrainAndValidation,
    /// A shuffled fraction of keys goes to train; all keys to validation.
    FractionTrainAllValidation(f64),
}

/// Key/non-key feature pair for one split.
#[derive(Debug, Clone)]
pub struct PopulationPair<T> {
    pub keys: Matrix<T>,
    pub nonkeys: Matrix<T>,
}

/// Result of [`LabeledDataset::split`].
#[derive(Debug, Clone)]
pub struct SplitSets<T> {
    pub train: PopulationPair<T>,
    pub val: PopulationPair<T>,
    pub test: PopulationPair<T>,
}

fn check_counts(n_keys: usize, n_nonkeys: usize, dim: usize) -> Result<()> {
    if n_keys < 1 || n_nonkeys < 1 {
        return Err(Error::invalid("need at least one key and one non-key"));
    }
    if dim < 1 {
        return Err(Error::invalid("dimensionality must be >= 1"));
    }
    Ok(())
}

fn gen_population<T: Scalar>(
    n: usize,
    dim: usize,
    seed: u64,
    pop_tag: u64,
    fill: impl Fn(&mut SplitMix64, &mut [T]),
) -> Matrix<T> {
    let mut m = Matrix::zeros(n, dim);
    for i in 0..n {
        let mut rng = substream(seed, pop_tag, i as u64);
        fill(&mut rng, m.row_mut(i));
    }
    m
}

fn fill_gaussian_row<T: Scalar>(rng: &mut SplitMix64, row: &mut [T], mean: impl Fn(usize) -> f64) {
    let mut j = 0;
    while j < row.len() {
        let (a, b) = rng.next_gaussian_pair();
        row[j] = T::from_f64_lossy(mean(j) + a);
        if j + 1 < row.len() {
            row[j + 1] = T::from_f64_lossy(mean(j + 1) + b);
        }
        j += 2;
    }
}

fn gen_centers(c: usize, dim: usize, seed: u64, center_tag: u64) -> Vec<Vec<f64>> {
    (0..c)
        .map(|i| {
            let mut rng = substream(seed, center_tag, i as u64);
            (0..dim).map(|_| rng.next_range(-10.0, 10.0)).collect()
        })
        .collect()
}

/// Block assignment: cluster 0 gets samples `0..size_0`, and so on, with
/// the first `n % c` clusters one sample larger.
fn cluster_of(sample: usize, n: usize, c: usize) -> usize {
    let base = n / c;
    let extra = n % c;
    let boundary = extra * (base + 1);
    if sample < boundary {
        sample / (base + 1)
    } else {
        extra + (sample - boundary) / base.max(1)
    }
}

fn fill_cluster_population<T: Scalar>(
    m: &mut Matrix<T>,
    centers: &[Vec<f64>],
    c: usize,
    seed: u64,
    pop_tag: u64,
) {
    let n = m.rows();
    for i in 0..n {
        let center = &centers[cluster_of(i, n, c)];
        let mut rng = substream(seed, pop_tag, i as u64);
        let row = m.row_mut(i);
        let mut j = 0;
        while j < row.len() {
            let (a, b) = rng.next_gaussian_pair();
            row[j] = T::from_f64_lossy(center[j] + a);
            if j + 1 < row.len() {
                row[j + 1] = T::from_f64_lossy(center[j + 1] + b);
            }
            j += 2;
        }
    }
}
