//! Gradient-boosted decision trees with logistic loss.
//!
//! The booster exists to feed the cascade: it exposes per-prefix scores
//! (the tentative output after the first `d` trees), a structural byte size
//! per tree, and a measured inference time per tree. Training is
//! deterministic: exact greedy splits on presorted columns, Newton leaf
//! values, no subsampling, single-threaded.
//!
//! `prefix_score(x, d) = sigmoid(base_margin + learning_rate * sum_{i<=d} tree_i(x))`.

mod tree;

pub use tree::{Node, Tree};

use std::time::Instant;

use crate::dataset::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use tree::Presorted;

/// Training parameters.
#[derive(Debug, Clone)]
pub struct TrainParams {
    /// Number of boosting rounds (trees).
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Additive regularizer on the leaf Newton step denominator.
    pub hessian_reg: f64,
    pub min_samples_leaf: u64,
    /// Reserved for stochastic variants; training is fully deterministic.
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            rounds: 100,
            max_depth: 6,
            learning_rate: 0.3,
            hessian_reg: 1.0,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

/// Per-tree memory and inference-time constants consumed by the optimizer.
#[derive(Debug, Clone)]
pub struct ModelCosts {
    pub size_bytes: Vec<usize>,
    pub time_ns: Vec<f64>,
}

impl ModelCosts {
    /// Total model bytes for a prefix of `depth` trees.
    pub fn prefix_bytes(&self, depth: usize) -> usize {
        self.size_bytes[..depth].iter().sum()
    }
}

/// Ordered boosted trees with calibration data.
#[derive(Debug, Clone)]
pub struct BoostedEnsemble<T> {
    trees: Vec<Tree<T>>,
    base_margin: f64,
    learning_rate: f64,
    max_depth: usize,
    num_features: usize,
    per_tree_time_ns: Option<Vec<f64>>,
}

#[inline]
fn sigmoid(m: f64) -> f64 {
    1.0 / (1.0 + (-m).exp())
}

impl<T: Scalar> BoostedEnsemble<T> {
    /// Fit `rounds` trees to separate keys (label 1) from non-keys (label 0).
    pub fn train(
        train_keys: &Matrix<T>,
        train_nonkeys: &Matrix<T>,
        params: &TrainParams,
    ) -> Result<Self> {
        if params.rounds < 1 {
            return Err(Error::invalid("rounds must be >= 1"));
        }
        if params.learning_rate <= 0.0 {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if train_keys.rows() == 0 || train_nonkeys.rows() == 0 {
            return Err(Error::invalid(
                "training needs at least one sample per label",
            ));
        }
        if train_keys.cols() != train_nonkeys.cols() {
            return Err(Error::DimensionMismatch {
                expected: train_keys.cols(),
                found: train_nonkeys.cols(),
            });
        }

        let n_pos = train_keys.rows();
        let n_neg = train_nonkeys.rows();
        let n = n_pos + n_neg;
        let mut rows: Vec<Vec<T>> = Vec::with_capacity(n);
        rows.extend(train_keys.iter_rows().map(|r| r.to_vec()));
        rows.extend(train_nonkeys.iter_rows().map(|r| r.to_vec()));
        let x = Matrix::from_rows(rows, train_keys.cols())?;
        let labels: Vec<f64> = (0..n).map(|i| if i < n_pos { 1.0 } else { 0.0 }).collect();

        let base_margin = (n_pos as f64 / n_neg as f64).ln();
        let presorted = Presorted::build(&x);
        let mut margins = vec![base_margin; n];
        let mut grad = vec![0.0f64; n];
        let mut hess = vec![0.0f64; n];
        let mut trees = Vec::with_capacity(params.rounds);

        for _round in 0..params.rounds {
            for i in 0..n {
                let p = sigmoid(margins[i]);
                grad[i] = labels[i] - p; // negative gradient of logistic loss
                hess[i] = p * (1.0 - p);
            }
            let (tree, leaf_of) = tree::grow(
                &x,
                &presorted,
                &grad,
                &hess,
                params.max_depth,
                params.hessian_reg,
                params.min_samples_leaf,
            )?;
            for i in 0..n {
                let leaf_value = match &tree.nodes[leaf_of[i] as usize] {
                    Node::Leaf { value } => value.as_f64(),
                    Node::Split { .. } => unreachable!("samples land in leaves"),
                };
                margins[i] += params.learning_rate * leaf_value;
            }
            trees.push(tree);
        }

        Ok(BoostedEnsemble {
            trees,
            base_margin,
            learning_rate: params.learning_rate,
            max_depth: params.max_depth,
            num_features: x.cols(),
            per_tree_time_ns: None,
        })
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn base_margin(&self) -> f64 {
        self.base_margin
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Sigmoid of the margin accumulated over the first `depth` trees.
    pub fn prefix_score(&self, row: &[T], depth: usize) -> Result<f64> {
        self.check_depth(depth)?;
        let mut cursor = self.score_cursor(row);
        let mut score = 0.0;
        for _ in 0..depth {
            score = cursor.advance();
        }
        Ok(score)
    }

    fn check_depth(&self, depth: usize) -> Result<()> {
        if depth < 1 || depth > self.trees.len() {
            return Err(Error::invalid(format!(
                "prefix depth {depth} out of range 1..={}",
                self.trees.len()
            )));
        }
        Ok(())
    }

    /// Incremental scorer: each `advance` evaluates exactly one more tree.
    pub fn score_cursor<'a>(&'a self, row: &'a [T]) -> ScoreCursor<'a, T> {
        ScoreCursor {
            ensemble: self,
            row,
            margin: self.base_margin,
            depth: 0,
        }
    }

    /// Prefix scores for every row at every depth: `out[d][i]` is the score
    /// of row `i` after `d + 1` trees.
    pub fn score_matrix(&self, m: &Matrix<T>) -> Vec<Vec<f64>> {
        let d_bar = self.trees.len();
        let mut out = vec![vec![0.0f64; m.rows()]; d_bar];
        for i in 0..m.rows() {
            let mut cursor = self.score_cursor(m.row(i));
            for row_out in out.iter_mut() {
                row_out[i] = cursor.advance();
            }
        }
        out
    }

    /// Structural byte size of tree `depth` (1-based).
    pub fn tree_size_bytes(&self, depth: usize) -> Result<usize> {
        self.check_depth(depth)?;
        Ok(self.trees[depth - 1].size_bytes())
    }

    /// Measured mean single-tree inference time, set by `calibrate_times`.
    pub fn per_tree_time_ns(&self) -> Option<&[f64]> {
        self.per_tree_time_ns.as_deref()
    }

    /// Override measured times (reproducible builds, tests).
    pub fn set_per_tree_time_ns(&mut self, times: Vec<f64>) -> Result<()> {
        if times.len() != self.trees.len() {
            return Err(Error::DimensionMismatch {
                expected: self.trees.len(),
                found: times.len(),
            });
        }
        if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::invalid("per-tree times must be positive"));
        }
        self.per_tree_time_ns = Some(times);
        Ok(())
    }

    /// Time each tree alone: `repeats` batches over `samples`, median of
    /// batch means. `repeats * samples.rows()` evaluations per tree; use
    /// at least 1e5 to suppress timer jitter.
    pub fn calibrate_times(&mut self, samples: &Matrix<T>, repeats: usize) -> Result<()> {
        if repeats < 1 {
            return Err(Error::invalid("repeats must be >= 1"));
        }
        if samples.rows() == 0 {
            return Err(Error::invalid("calibration needs at least one sample"));
        }
        if samples.cols() != self.num_features {
            return Err(Error::DimensionMismatch {
                expected: self.num_features,
                found: samples.cols(),
            });
        }
        let mut times = Vec::with_capacity(self.trees.len());
        for tree in &self.trees {
            let mut batch_means = Vec::with_capacity(repeats);
            for _ in 0..repeats {
                let start = Instant::now();
                let mut sink = T::zero();
                for i in 0..samples.rows() {
                    sink = sink + tree.eval(samples.row(i));
                }
                std::hint::black_box(sink);
                let elapsed = start.elapsed().as_nanos() as f64;
                batch_means.push(elapsed / samples.rows() as f64);
            }
            batch_means.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = batch_means[batch_means.len() / 2];
            // timer quantization can floor tiny batches at zero
            times.push(median.max(0.01));
        }
        self.per_tree_time_ns = Some(times);
        Ok(())
    }

    /// Size/time constants for the optimizer; requires calibrated times.
    pub fn model_costs(&self) -> Result<ModelCosts> {
        let time_ns = self
            .per_tree_time_ns
            .clone()
            .ok_or_else(|| Error::invalid("ensemble is not time-calibrated"))?;
        Ok(ModelCosts {
            size_bytes: self.trees.iter().map(|t| t.size_bytes()).collect(),
            time_ns,
        })
    }

    /// Ensemble truncated to its first `depth` trees.
    pub fn prefix_clone(&self, depth: usize) -> Result<Self> {
        self.check_depth(depth)?;
        Ok(BoostedEnsemble {
            trees: self.trees[..depth].to_vec(),
            base_margin: self.base_margin,
            learning_rate: self.learning_rate,
            max_depth: self.max_depth,
            num_features: self.num_features,
            per_tree_time_ns: self.per_tree_time_ns.as_ref().map(|t| t[..depth].to_vec()),
        })
    }

    /// Mean logistic loss of the full-ensemble scores on the given sets.
    pub fn logistic_loss(&self, keys: &Matrix<T>, nonkeys: &Matrix<T>, depth: usize) -> Result<f64> {
        self.check_depth(depth)?;
        let mut total = 0.0;
        for r in keys.iter_rows() {
            let p = self.prefix_score(r, depth)?;
            total -= p.max(1e-15).ln();
        }
        for r in nonkeys.iter_rows() {
            let p = self.prefix_score(r, depth)?;
            total -= (1.0 - p).max(1e-15).ln();
        }
        Ok(total / (keys.rows() + nonkeys.rows()) as f64)
    }

    /// Serialize: magic `CLBF-GBT1`, header, then pre-order node records.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.base_margin.to_le_bytes());
        out.extend_from_slice(&self.learning_rate.to_le_bytes());
        out.extend_from_slice(&(self.max_depth as u32).to_le_bytes());
        out.extend_from_slice(&(self.num_features as u32).to_le_bytes());
        out.extend_from_slice(&(self.trees.len() as u32).to_le_bytes());
        out.push(self.per_tree_time_ns.is_some() as u8);
        for (d, tree) in self.trees.iter().enumerate() {
            let time = self
                .per_tree_time_ns
                .as_ref()
                .map(|t| t[d])
                .unwrap_or(0.0);
            out.extend_from_slice(&time.to_le_bytes());
            out.extend_from_slice(&(tree.nodes.len() as u32).to_le_bytes());
            write_preorder(tree, 0, &mut out);
        }
        out
    }

    /// Parse from the front of `buf`; returns the ensemble and bytes consumed.
    pub fn from_bytes(buf: &[u8]) -> Result<(Self, usize)> {
        let mut r = crate::bloom::Reader::new(buf);
        r.magic(MAGIC)?;
        let base_margin = r.f64()?;
        let learning_rate = r.f64()?;
        let max_depth = r.u32()? as usize;
        let num_features = r.u32()? as usize;
        let tree_count = r.u32()? as usize;
        let has_times = r.u8()? != 0;
        let mut trees = Vec::with_capacity(tree_count);
        let mut times = Vec::with_capacity(tree_count);
        for _ in 0..tree_count {
            times.push(r.f64()?);
            let node_count = r.u32()? as usize;
            trees.push(Tree {
                nodes: read_preorder(&mut r, node_count)?,
            });
        }
        Ok((
            BoostedEnsemble {
                trees,
                base_margin,
                learning_rate,
                max_depth,
                num_features,
                per_tree_time_ns: has_times.then_some(times),
            },
            r.consumed(),
        ))
    }

    /// Build an ensemble from explicit trees (tests, degenerate cases).
    pub fn from_trees(
        trees: Vec<Tree<T>>,
        base_margin: f64,
        learning_rate: f64,
        num_features: usize,
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::invalid("ensemble needs at least one tree"));
        }
        Ok(BoostedEnsemble {
            max_depth: 0,
            trees,
            base_margin,
            learning_rate,
            num_features,
            per_tree_time_ns: None,
        })
    }
}

const MAGIC: &[u8] = b"CLBF-GBT1";

fn write_preorder<T: Scalar>(tree: &Tree<T>, idx: usize, out: &mut Vec<u8>) {
    match &tree.nodes[idx] {
        Node::Leaf { value } => {
            out.push(1);
            out.extend_from_slice(&value.as_f64().to_le_bytes());
        }
        Node::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            out.push(0);
            out.extend_from_slice(&feature.to_le_bytes());
            out.extend_from_slice(&threshold.as_f64().to_le_bytes());
            write_preorder(tree, *left as usize, out);
            write_preorder(tree, *right as usize, out);
        }
    }
}

fn read_preorder<T: Scalar>(
    r: &mut crate::bloom::Reader,
    node_count: usize,
) -> Result<Vec<Node<T>>> {
    enum Pending {
        Left(u32),
        Right(u32),
    }
    let mut nodes: Vec<Node<T>> = Vec::with_capacity(node_count.min(1 << 20));
    let mut stack: Vec<Pending> = Vec::new();
    loop {
        if nodes.len() >= node_count {
            return Err(Error::format("tree has more nodes than declared"));
        }
        let my_idx = nodes.len() as u32;
        let tag = r.u8()?;
        match tag {
            1 => nodes.push(Node::Leaf {
                value: T::from_f64_lossy(r.f64()?),
            }),
            0 => {
                let feature = r.u32()?;
                let threshold = T::from_f64_lossy(r.f64()?);
                nodes.push(Node::Split {
                    feature,
                    threshold,
                    left: 0,
                    right: 0,
                });
            }
            other => return Err(Error::format(format!("unknown node tag {other}"))),
        }
        if my_idx > 0 {
            match stack.pop() {
                Some(Pending::Left(p)) => {
                    if let Node::Split { left, .. } = &mut nodes[p as usize] {
                        *left = my_idx;
                    }
                    stack.push(Pending::Right(p));
                }
                Some(Pending::Right(p)) => {
                    if let Node::Split { right, .. } = &mut nodes[p as usize] {
                        *right = my_idx;
                    }
                }
                None => return Err(Error::format("dangling node after complete tree")),
            }
        }
        if tag == 0 {
            stack.push(Pending::Left(my_idx));
        }
        if stack.is_empty() {
            break;
        }
    }
    if nodes.len() != node_count {
        return Err(Error::format("tree node count mismatch"));
    }
    Ok(nodes)
}

/// Incremental per-depth scorer over one feature row.
pub struct ScoreCursor<'a, T> {
    ensemble: &'a BoostedEnsemble<T>,
    row: &'a [T],
    margin: f64,
    depth: usize,
}

impl<T: Scalar> ScoreCursor<'_, T> {
    /// Evaluate the next tree and return the updated score.
    #[inline]
    pub fn advance(&mut self) -> f64 {
        let tree = &self.ensemble.trees[self.depth];
        self.margin += self.ensemble.learning_rate * tree.eval(self.row).as_f64();
        self.depth += 1;
        sigmoid(self.margin)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }
}

/// Area under the ROC curve via the rank statistic, with tie correction.
pub fn auc(pos_scores: &[f64], neg_scores: &[f64]) -> f64 {
    let n_pos = pos_scores.len();
    let n_neg = neg_scores.len();
    assert!(n_pos > 0 && n_neg > 0, "auc needs both classes");
    let mut all: Vec<(f64, bool)> = pos_scores
        .iter()
        .map(|&s| (s, true))
        .chain(neg_scores.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // average rank over the tie group (1-based ranks)
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for item in &all[i..j] {
            if item.1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    u / (n_pos as f64 * n_neg as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::LabeledDataset;

    fn column(vals: &[f64]) -> Matrix<f64> {
        Matrix::from_rows(vals.iter().map(|&v| vec![v]).collect(), 1).unwrap()
    }

    #[test]
    fn separable_stump_ranks_key_above_nonkey() {
        let keys = column(&[0.5, 1.0, 2.0, 3.0]);
        let nonkeys = column(&[-0.5, -1.0, -2.0, -3.0]);
        let params = TrainParams {
            rounds: 1,
            max_depth: 1,
            ..Default::default()
        };
        let ens = BoostedEnsemble::train(&keys, &nonkeys, &params).unwrap();
        assert_eq!(ens.num_trees(), 1);
        assert_eq!(ens.tree_size_bytes(1).unwrap(), 36); // one stump
        let key_score = ens.prefix_score(&[1.5], 1).unwrap();
        let nonkey_score = ens.prefix_score(&[-1.5], 1).unwrap();
        assert!(key_score > nonkey_score);
    }

    #[test]
    fn random_data_has_chance_auc() {
        let ds = LabeledDataset::<f64>::gen_random(3000, 3000, 10, 5).unwrap();
        let val = LabeledDataset::<f64>::gen_random(2000, 2000, 10, 6).unwrap();
        let params = TrainParams {
            rounds: 10,
            max_depth: 3,
            ..Default::default()
        };
        let ens = BoostedEnsemble::train(&ds.keys, &ds.nonkeys, &params).unwrap();
        let d = ens.num_trees();
        let pos: Vec<f64> = val
            .keys
            .iter_rows()
            .map(|r| ens.prefix_score(r, d).unwrap())
            .collect();
        let neg: Vec<f64> = val
            .nonkeys
            .iter_rows()
            .map(|r| ens.prefix_score(r, d).unwrap())
            .collect();
        let a = auc(&pos, &neg);
        assert!((0.45..=0.55).contains(&a), "auc {a} on unlearnable data");
    }

    #[test]
    fn separated_data_reaches_high_auc_after_one_tree() {
        let ds = LabeledDataset::<f64>::gen_separation(5.0, 3000, 3000, 20, 8).unwrap();
        let val = LabeledDataset::<f64>::gen_separation(5.0, 1500, 1500, 20, 9).unwrap();
        let params = TrainParams {
            rounds: 3,
            max_depth: 6,
            ..Default::default()
        };
        let ens = BoostedEnsemble::train(&ds.keys, &ds.nonkeys, &params).unwrap();
        let pos: Vec<f64> = val
            .keys
            .iter_rows()
            .map(|r| ens.prefix_score(r, 1).unwrap())
            .collect();
        let neg: Vec<f64> = val
            .nonkeys
            .iter_rows()
            .map(|r| ens.prefix_score(r, 1).unwrap())
            .collect();
        let a = auc(&pos, &neg);
        assert!(a > 0.99, "auc {a} after one tree");
    }

    #[test]
    fn training_loss_non_increasing() {
        let ds = LabeledDataset::<f64>::gen_separation(1.0, 800, 800, 10, 3).unwrap();
        let params = TrainParams {
            rounds: 12,
            max_depth: 3,
            ..Default::default()
        };
        let ens = BoostedEnsemble::train(&ds.keys, &ds.nonkeys, &params).unwrap();
        let mut prev = f64::INFINITY;
        for d in 1..=ens.num_trees() {
            let loss = ens.logistic_loss(&ds.keys, &ds.nonkeys, d).unwrap();
            assert!(
                loss <= prev + 1e-9,
                "loss increased at depth {d}: {prev} -> {loss}"
            );
            prev = loss;
        }
    }

    #[test]
    fn degenerate_single_leaf_scores_half() {
        let ens =
            BoostedEnsemble::from_trees(vec![Tree::leaf(0.0f64)], 0.0, 0.3, 1).unwrap();
        assert_eq!(ens.prefix_score(&[1.0], 1).unwrap(), 0.5);
        assert!(ens.prefix_score(&[1.0], 0).is_err());
        assert!(ens.prefix_score(&[1.0], 2).is_err());
    }

    #[test]
    fn scores_strictly_inside_unit_interval() {
        let ds = LabeledDataset::<f64>::gen_separation(5.0, 500, 500, 5, 2).unwrap();
        let params = TrainParams {
            rounds: 30,
            max_depth: 4,
            ..Default::default()
        };
        let ens = BoostedEnsemble::train(&ds.keys, &ds.nonkeys, &params).unwrap();
        for r in ds.keys.iter_rows().chain(ds.nonkeys.iter_rows()) {
            let s = ens.prefix_score(r, ens.num_trees()).unwrap();
            assert!(s > 0.0 && s < 1.0, "score {s} left (0,1)");
        }
    }

    #[test]
    fn score_matrix_matches_prefix_score_bitwise() {
        let ds = LabeledDataset::<f64>::gen_separation(1.0, 200, 200, 6, 4).unwrap();
        let params = TrainParams {
            rounds: 7,
            max_depth: 3,
            ..Default::default()
        };
        let ens = BoostedEnsemble::train(&ds.keys, &ds.nonkeys, &params).unwrap();
        let m = ens.score_matrix(&ds.keys);
        for d in 1..=7 {
            for i in 0..ds.keys.rows() {
                let direct = ens.prefix_score(ds.keys.row(i), d).unwrap();
                assert_eq!(m[d - 1][i].to_bits(), direct.to_bits());
            }
        }
    }

    #[test]
    fn determinism_across_runs() {
        let ds = LabeledDataset::<f64>::gen_clusters(4, 400, 400, 8, 12).unwrap();
        let params = TrainParams {
            rounds: 5,
            max_depth: 4,
            ..Default::default()
        };
        let a = BoostedEnsemble::train(&ds.keys, &ds.nonkeys, &params).unwrap();
        let b = BoostedEnsemble::train(&ds.keys, &ds.nonkeys, &params).unwrap();
        for i in 0..ds.nonkeys.rows() {
            let sa = a.prefix_score(ds.nonkeys.row(i), 5).unwrap();
            let sb = b.prefix_score(ds.nonkeys.row(i), 5).unwrap();
            assert_eq!(sa.to_bits(), sb.to_bits());
        }
    }

    #[test]
    fn calibration_produces_positive_comparable_times() {
        let ds = LabeledDataset::<f64>::gen_separation(2.0, 1000, 1000, 10, 7).unwrap();
        let stump_params = TrainParams {
            rounds: 6,
            max_depth: 1,
            ..Default::default()
        };
        let mut stumps = BoostedEnsemble::train(&ds.keys, &ds.nonkeys, &stump_params).unwrap();
        stumps.calibrate_times(&ds.nonkeys, 100).unwrap();
        let times = stumps.per_tree_time_ns().unwrap().to_vec();
        assert!(times.iter().all(|&t| t > 0.0));
        let min = times.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = times.iter().cloned().fold(0.0f64, f64::max);
        assert!(
            max / min < 5.0,
            "stump times should be within 5x: {times:?}"
        );

        let deep_params = TrainParams {
            rounds: 6,
            max_depth: 6,
            ..Default::default()
        };
        let mut deep = BoostedEnsemble::train(&ds.keys, &ds.nonkeys, &deep_params).unwrap();
        deep.calibrate_times(&ds.nonkeys, 100).unwrap();
        let deep_mean: f64 =
            deep.per_tree_time_ns().unwrap().iter().sum::<f64>() / 6.0;
        let stump_mean: f64 = times.iter().sum::<f64>() / 6.0;
        assert!(
            deep_mean >= stump_mean * 0.8,
            "deeper trees should not be meaningfully faster: {deep_mean} vs {stump_mean}"
        );
    }

    #[test]
    fn size_accounting_sums_over_prefix() {
        let ds = LabeledDataset::<f64>::gen_separation(1.0, 300, 300, 5, 6).unwrap();
        let params = TrainParams {
            rounds: 4,
            max_depth: 2,
            ..Default::default()
        };
        let mut ens = BoostedEnsemble::train(&ds.keys, &ds.nonkeys, &params).unwrap();
        ens.set_per_tree_time_ns(vec![1.0; 4]).unwrap();
        let costs = ens.model_costs().unwrap();
        for d in 1..=4 {
            let direct: usize = (1..=d).map(|i| ens.tree_size_bytes(i).unwrap()).sum();
            assert_eq!(costs.prefix_bytes(d), direct);
        }
    }

    #[test]
    fn serialization_round_trip_preserves_scores() {
        let ds = LabeledDataset::<f64>::gen_clusters(2, 300, 300, 6, 3).unwrap();
        let params = TrainParams {
            rounds: 5,
            max_depth: 4,
            ..Default::default()
        };
        let mut ens = BoostedEnsemble::train(&ds.keys, &ds.nonkeys, &params).unwrap();
        ens.set_per_tree_time_ns(vec![10.0, 20.0, 30.0, 40.0, 50.0])
            .unwrap();
        let bytes = ens.to_bytes();
        let (back, used) = BoostedEnsemble::<f64>::from_bytes(&bytes).unwrap();
        assert_eq!(used, bytes.len());
        assert_eq!(back.per_tree_time_ns().unwrap(), &[10.0, 20.0, 30.0, 40.0, 50.0]);
        for i in 0..ds.keys.rows() {
            for d in 1..=5 {
                let a = ens.prefix_score(ds.keys.row(i), d).unwrap();
                let b = back.prefix_score(ds.keys.row(i), d).unwrap();
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn auc_basics() {
        assert_eq!(auc(&[1.0, 0.9], &[0.1, 0.2]), 1.0);
        assert_eq!(auc(&[0.1], &[0.9]), 0.0);
        assert_eq!(auc(&[0.5, 0.5], &[0.5, 0.5]), 0.5);
    }

    #[test]
    fn train_rejects_bad_inputs() {
        let ds = LabeledDataset::<f64>::gen_random(20, 20, 3, 1).unwrap();
        let bad_rounds = TrainParams {
            rounds: 0,
            ..Default::default()
        };
        assert!(BoostedEnsemble::train(&ds.keys, &ds.nonkeys, &bad_rounds).is_err());

        let empty = Matrix::<f64>::zeros(0, 3);
        assert!(BoostedEnsemble::train(&empty, &ds.nonkeys, &TrainParams::default()).is_err());

        let narrow = LabeledDataset::<f64>::gen_random(20, 20, 2, 1).unwrap();
        assert!(matches!(
            BoostedEnsemble::train(&ds.keys, &narrow.nonkeys, &TrainParams::default()),
            Err(crate::Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn many_clusters_are_hard_to_learn() {
        // with nearly as many clusters as samples the structure washes out
        // and held-out discrimination drifts toward chance; samples are
        // i.i.d. per row, so a row split yields a proper holdout
        let held_out_auc = |c: usize| -> f64 {
            let ds = LabeledDataset::<f64>::gen_clusters(c, 4000, 4000, 10, 15).unwrap();
            let train_rows: Vec<usize> = (0..3000).collect();
            let val_rows: Vec<usize> = (3000..4000).collect();
            let params = TrainParams {
                rounds: 10,
                max_depth: 3,
                ..Default::default()
            };
            let ens = BoostedEnsemble::train(
                &ds.keys.select(&train_rows),
                &ds.nonkeys.select(&train_rows),
                &params,
            )
            .unwrap();
            let score = |m: &Matrix<f64>| -> Vec<f64> {
                val_rows
                    .iter()
                    .map(|&i| ens.prefix_score(m.row(i), 10).unwrap())
                    .collect()
            };
            auc(&score(&ds.keys), &score(&ds.nonkeys))
        };
        let hard = held_out_auc(4096);
        let easy = held_out_auc(1);
        assert!(hard < 0.85, "4096-cluster auc {hard}");
        assert!(easy > 0.99, "single-cluster auc {easy}");
        assert!(easy > hard);
    }

    #[test]
    fn f32_training_smoke() {
        let ds = LabeledDataset::<f32>::gen_separation(4.0, 300, 300, 6, 1).unwrap();
        let params = TrainParams {
            rounds: 3,
            max_depth: 3,
            ..Default::default()
        };
        let ens = BoostedEnsemble::train(&ds.keys, &ds.nonkeys, &params).unwrap();
        let s_key = ens.prefix_score(ds.keys.row(0), 3).unwrap();
        let s_non = ens.prefix_score(ds.nonkeys.row(0), 3).unwrap();
        assert!(s_key > s_non);
    }
}
