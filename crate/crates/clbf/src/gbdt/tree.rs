//! Single regression tree: exact greedy growth and evaluation.
//!
//! Trees are grown level-wise on presorted feature columns. Split gain is
//! variance reduction of the fitted targets (the negative gradients), which
//! for a node reduces to maximizing `sumL^2/cntL + sumR^2/cntR`. Leaf
//! values are Newton steps `sum_grad / (sum_hess + reg)`.

use crate::dataset::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One tree node; children index into the owning tree's arena.
#[derive(Debug, Clone, PartialEq)]
pub enum Node<T> {
    Leaf {
        value: T,
    },
    Split {
        feature: u32,
        /// Rows with `x[feature] < threshold` go left.
        threshold: T,
        left: u32,
        right: u32,
    },
}

/// Regression tree stored as an arena rooted at node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree<T> {
    pub(crate) nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    /// Tree consisting of a single leaf.
    pub fn leaf(value: T) -> Self {
        Tree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    #[inline]
    pub fn eval(&self, row: &[T]) -> T {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature as usize] < *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn num_internal(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Split { .. }))
            .count()
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.len() - self.num_internal()
    }

    /// Structural memory accounting: 4 bytes feature index + 8 bytes
    /// threshold + 8 bytes child offsets per internal node, 8 bytes per
    /// leaf value. Deterministic across platforms, unlike serialized size.
    pub fn size_bytes(&self) -> usize {
        self.num_internal() * 20 + self.num_leaves() * 8
    }
}

/// Feature columns presorted by value (ties by row index); shared by every
/// tree grown on the same matrix.
pub(crate) struct Presorted {
    pub(crate) by_feature: Vec<Vec<u32>>,
}

impl Presorted {
    pub(crate) fn build<T: Scalar>(x: &Matrix<T>) -> Self {
        let by_feature = (0..x.cols())
            .map(|f| {
                let mut idx: Vec<u32> = (0..x.rows() as u32).collect();
                idx.sort_unstable_by(|&a, &b| {
                    x.row(a as usize)[f]
                        .partial_cmp(&x.row(b as usize)[f])
                        .expect("finite feature values")
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        Presorted { by_feature }
    }
}

const NO_NODE: u32 = u32::MAX;

struct FrontierStats {
    count: u64,
    sum_grad: f64,
    sum_hess: f64,
}

struct BestSplit<T> {
    gain: f64,
    feature: u32,
    threshold: T,
}

/// Grow one tree on targets `grad` with curvatures `hess`.
///
/// Returns the tree and the arena index of the leaf each sample lands in,
/// so the booster can update margins without re-walking the tree.
pub(crate) fn grow<T: Scalar>(
    x: &Matrix<T>,
    presorted: &Presorted,
    grad: &[f64],
    hess: &[f64],
    max_depth: usize,
    hessian_reg: f64,
    min_samples_leaf: u64,
) -> Result<(Tree<T>, Vec<u32>)> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::invalid("cannot grow a tree on zero samples"));
    }

    let mut nodes: Vec<Node<T>> = vec![Node::Leaf { value: T::zero() }];
    let mut node_of: Vec<u32> = vec![0; n];
    // nodes still open for splitting at the current level
    let mut frontier: Vec<u32> = vec![0];

    for _level in 0..max_depth {
        if frontier.is_empty() {
            break;
        }
        // slot lookup: arena node id -> frontier position
        let mut slot_of: Vec<u32> = vec![NO_NODE; nodes.len()];
        for (s, &nid) in frontier.iter().enumerate() {
            slot_of[nid as usize] = s as u32;
        }

        let mut stats: Vec<FrontierStats> = frontier
            .iter()
            .map(|_| FrontierStats {
                count: 0,
                sum_grad: 0.0,
                sum_hess: 0.0,
            })
            .collect();
        for i in 0..n {
            let slot = slot_of[node_of[i] as usize];
            if slot == NO_NODE {
                continue;
            }
            let s = &mut stats[slot as usize];
            s.count += 1;
            s.sum_grad += grad[i];
            s.sum_hess += hess[i];
        }

        let mut best: Vec<Option<BestSplit<T>>> = frontier.iter().map(|_| None).collect();
        let mut left_count = vec![0u64; frontier.len()];
        let mut left_sum = vec![0.0f64; frontier.len()];
        let mut prev_value: Vec<Option<T>> = vec![None; frontier.len()];

        for f in 0..x.cols() {
            for v in left_count.iter_mut() {
                *v = 0;
            }
            for v in left_sum.iter_mut() {
                *v = 0.0;
            }
            for v in prev_value.iter_mut() {
                *v = None;
            }
            for &i in &presorted.by_feature[f] {
                let i = i as usize;
                let slot = slot_of[node_of[i] as usize];
                if slot == NO_NODE {
                    continue;
                }
                let s = slot as usize;
                let value = x.row(i)[f];
                if let Some(pv) = prev_value[s] {
                    if value > pv {
                        let lc = left_count[s];
                        let rc = stats[s].count - lc;
                        if lc >= min_samples_leaf && rc >= min_samples_leaf {
                            let ls = left_sum[s];
                            let rs = stats[s].sum_grad - ls;
                            let total = stats[s].sum_grad;
                            let gain = ls * ls / lc as f64 + rs * rs / rc as f64
                                - total * total / stats[s].count as f64;
                            let better = match &best[s] {
                                None => gain > 1e-12,
                                Some(b) => gain > b.gain,
                            };
                            if better {
                                // threshold = smallest value routed right;
                                // reproduces the scan partition exactly
                                best[s] = Some(BestSplit {
                                    gain,
                                    feature: f as u32,
                                    threshold: value,
                                });
                            }
                        }
                    }
                }
                left_count[s] += 1;
                left_sum[s] += grad[i];
                prev_value[s] = Some(value);
            }
        }

        // materialize the chosen splits
        let mut next_frontier = Vec::new();
        let mut split_of_node: Vec<Option<(u32, T, u32, u32)>> = vec![None; nodes.len()];
        for (s, &nid) in frontier.iter().enumerate() {
            match &best[s] {
                Some(b) => {
                    let left = nodes.len() as u32;
                    let right = left + 1;
                    nodes.push(Node::Leaf { value: T::zero() });
                    nodes.push(Node::Leaf { value: T::zero() });
                    nodes[nid as usize] = Node::Split {
                        feature: b.feature,
                        threshold: b.threshold,
                        left,
                        right,
                    };
                    split_of_node[nid as usize] = Some((b.feature, b.threshold, left, right));
                    next_frontier.push(left);
                    next_frontier.push(right);
                }
                None => {
                    // no usable gain: finalize below
                    finalize_leaf(&mut nodes, nid, &stats[s], hessian_reg);
                }
            }
        }
        // reassign samples to children (single pass over all samples)
        for i in 0..n {
            if let Some((f, thr, left, right)) = split_of_node[node_of[i] as usize] {
                node_of[i] = if x.row(i)[f as usize] < thr { left } else { right };
            }
        }
        frontier = next_frontier;
    }

    // depth cap reached (or single-leaf root): finalize remaining frontier
    if !frontier.is_empty() {
        let mut slot_of: Vec<u32> = vec![NO_NODE; nodes.len()];
        for (s, &nid) in frontier.iter().enumerate() {
            slot_of[nid as usize] = s as u32;
        }
        let mut stats: Vec<FrontierStats> = frontier
            .iter()
            .map(|_| FrontierStats {
                count: 0,
                sum_grad: 0.0,
                sum_hess: 0.0,
            })
            .collect();
        for i in 0..n {
            let slot = slot_of[node_of[i] as usize];
            if slot != NO_NODE {
                let s = &mut stats[slot as usize];
                s.count += 1;
                s.sum_grad += grad[i];
                s.sum_hess += hess[i];
            }
        }
        for (s, &nid) in frontier.iter().enumerate() {
            finalize_leaf(&mut nodes, nid, &stats[s], hessian_reg);
        }
    }

    Ok((Tree { nodes }, node_of))
}

fn finalize_leaf<T: Scalar>(nodes: &mut [Node<T>], nid: u32, stats: &FrontierStats, reg: f64) {
    let value = if stats.count == 0 {
        0.0
    } else {
        stats.sum_grad / (stats.sum_hess + reg)
    };
    nodes[nid as usize] = Node::Leaf {
        value: T::from_f64_lossy(value),
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<Vec<f64>>) -> Matrix<f64> {
        let cols = rows[0].len();
        Matrix::from_rows(rows, cols).unwrap()
    }

    #[test]
    fn separable_stump_splits_between_classes() {
        let x = matrix(vec![
            vec![-2.0],
            vec![-1.0],
            vec![-0.5],
            vec![0.5],
            vec![1.0],
            vec![2.0],
        ]);
        let grad = vec![-0.5, -0.5, -0.5, 0.5, 0.5, 0.5];
        let hess = vec![0.25; 6];
        let presorted = Presorted::build(&x);
        let (tree, leaves) = grow(&x, &presorted, &grad, &hess, 1, 1.0, 1).unwrap();
        assert_eq!(tree.num_internal(), 1);
        assert_eq!(tree.num_leaves(), 2);
        match &tree.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(*threshold, 0.5),
            other => panic!("expected split, got {other:?}"),
        }
        // negative side gets a negative value, positive side positive
        assert!(tree.eval(&[-1.5]) < 0.0);
        assert!(tree.eval(&[1.5]) > 0.0);
        // leaf assignment matches direct evaluation
        for (i, &leaf) in leaves.iter().enumerate() {
            match &tree.nodes[leaf as usize] {
                Node::Leaf { value } => assert_eq!(*value, tree.eval(x.row(i))),
                _ => panic!("sample assigned to internal node"),
            }
        }
    }

    #[test]
    fn constant_targets_make_single_leaf() {
        let x = matrix(vec![vec![1.0], vec![2.0], vec![3.0]]);
        let grad = vec![0.4, 0.4, 0.4];
        let hess = vec![0.2, 0.2, 0.2];
        let presorted = Presorted::build(&x);
        let (tree, _) = grow(&x, &presorted, &grad, &hess, 3, 1.0, 1).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        let expected = (0.4 * 3.0) / (0.2 * 3.0 + 1.0);
        assert!((tree.eval(&[9.9]) - expected).abs() < 1e-12);
    }

    #[test]
    fn depth_zero_is_single_leaf() {
        let x = matrix(vec![vec![0.0], vec![1.0]]);
        let (tree, _) =
            grow(&x, &Presorted::build(&x), &[1.0, -1.0], &[0.2, 0.2], 0, 1.0, 1).unwrap();
        assert_eq!(tree.nodes.len(), 1);
    }

    #[test]
    fn size_accounting() {
        assert_eq!(Tree::leaf(0.0f64).size_bytes(), 8);
        // depth-1 stump: 1 internal + 2 leaves
        let stump = Tree {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    threshold: 0.0f64,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: -1.0 },
                Node::Leaf { value: 1.0 },
            ],
        };
        assert_eq!(stump.size_bytes(), 36);
        // full depth-2 tree: 3 internal + 4 leaves
        let full = Tree {
            nodes: vec![
                Node::Split { feature: 0, threshold: 0.0f64, left: 1, right: 2 },
                Node::Split { feature: 1, threshold: 0.0, left: 3, right: 4 },
                Node::Split { feature: 1, threshold: 0.0, left: 5, right: 6 },
                Node::Leaf { value: 0.0 },
                Node::Leaf { value: 1.0 },
                Node::Leaf { value: 2.0 },
                Node::Leaf { value: 3.0 },
            ],
        };
        assert_eq!(full.size_bytes(), 92);
    }
}
