//! Routing proportions measured on validation data.
//!
//! With the trunk filters disabled (they pass keys unconditionally and
//! their misses are what the optimizer models analytically), routing is
//! driven purely by score branching. Walking the validation sets through
//! that branching yields, per depth: the fraction of keys/non-keys still
//! on the trunk, the fraction diverted into the branch filter, and — for
//! the hypothetical case that this depth is the last — the score-region
//! masses under a fresh KL partition of the surviving scores.
//!
//! Counts are stored as integers so conservation
//! (`trunk(d) = trunk(d+1) + branch(d)`) holds exactly; fractions are
//! derived views.

use crate::dataset::Matrix;
use crate::error::{Error, Result};
use crate::gbdt::BoostedEnsemble;
use crate::optimizer::kl::kl_partition;
use crate::scalar::Scalar;

/// Branch thresholds from the top-`alpha` quantile of surviving non-key
/// scores at each depth.
///
/// The walk is sequential: at depth d the threshold is placed so that a
/// fraction `alpha` of the non-keys *that reached depth d* score at or
/// above it, and those non-keys leave the population before depth d+1.
/// `alpha = 0` places the threshold strictly above every surviving
/// non-key score, so only keys can branch. If no non-keys survive to some
/// depth the threshold is set to the unreachable sentinel 2.0 and nothing
/// branches there.
///
/// `nonkey_scores[d][i]` is the prefix score of non-key `i` at depth
/// `d + 1` (as produced by `BoostedEnsemble::score_matrix`). Returns one
/// threshold per depth except the last.
pub fn candidate_thresholds(nonkey_scores: &[Vec<f64>], alpha: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must be in [0, 1), got {alpha}")));
    }
    let d_bar = nonkey_scores.len();
    if d_bar == 0 || nonkey_scores[0].is_empty() {
        return Err(Error::EmptyScoreSet(
            "threshold selection needs non-key scores".into(),
        ));
    }
    let mut survivors: Vec<usize> = (0..nonkey_scores[0].len()).collect();
    let mut thresholds = Vec::with_capacity(d_bar.saturating_sub(1));
    for depth_scores in nonkey_scores.iter().take(d_bar.saturating_sub(1)) {
        if survivors.is_empty() {
            thresholds.push(UNREACHABLE_THRESHOLD);
            continue;
        }
        let mut scores: Vec<f64> = survivors.iter().map(|&i| depth_scores[i]).collect();
        scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let branch_count = (alpha * scores.len() as f64).floor() as usize;
        let theta = if branch_count == 0 {
            // strictly above the maximum surviving non-key score
            next_above(scores[scores.len() - 1])
        } else {
            scores[scores.len() - branch_count]
        };
        thresholds.push(theta);
        survivors.retain(|&i| depth_scores[i] < theta);
    }
    Ok(thresholds)
}

/// Sentinel threshold no score can reach (scores live in (0, 1)).
pub const UNREACHABLE_THRESHOLD: f64 = 2.0;

fn next_above(x: f64) -> f64 {
    // smallest f64 strictly greater than x (x is a score in (0,1))
    f64::from_bits(x.to_bits() + 1)
}

/// Measured key/non-key routing per depth plus per-depth final partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthProfile {
    depth_count: usize,
    num_regions: usize,
    n_keys: u64,
    n_nonkeys: u64,
    theta: Vec<f64>,
    trunk_keys: Vec<u64>,
    trunk_nonkeys: Vec<u64>,
    branch_keys: Vec<u64>,
    branch_nonkeys: Vec<u64>,
    final_keys: Vec<Vec<u64>>,
    final_nonkeys: Vec<Vec<u64>>,
    /// `boundaries[d]` is the K+1-point partition used if depth d+1 is last.
    pub boundaries: Vec<Vec<f64>>,
}

impl DepthProfile {
    /// Route validation score matrices through branching only.
    ///
    /// `key_scores[d][i]` / `nonkey_scores[d][i]` are prefix scores at
    /// depth `d + 1`; `theta` has one entry per depth except the last.
    pub fn measure(
        key_scores: &[Vec<f64>],
        nonkey_scores: &[Vec<f64>],
        theta: &[f64],
        num_regions: usize,
        segments: usize,
    ) -> Result<Self> {
        let d_bar = key_scores.len();
        if d_bar == 0 {
            return Err(Error::invalid("profile needs at least one depth"));
        }
        if nonkey_scores.len() != d_bar {
            return Err(Error::DimensionMismatch {
                expected: d_bar,
                found: nonkey_scores.len(),
            });
        }
        if theta.len() + 1 != d_bar {
            return Err(Error::DimensionMismatch {
                expected: d_bar - 1,
                found: theta.len(),
            });
        }
        let n_keys = key_scores[0].len() as u64;
        let n_nonkeys = nonkey_scores[0].len() as u64;
        if n_keys == 0 {
            return Err(Error::EmptyScoreSet("profile needs key scores".into()));
        }

        let mut key_alive: Vec<usize> = (0..key_scores[0].len()).collect();
        let mut nonkey_alive: Vec<usize> = (0..nonkey_scores[0].len()).collect();
        let mut profile = DepthProfile {
            depth_count: d_bar,
            num_regions,
            n_keys,
            n_nonkeys,
            theta: theta.to_vec(),
            trunk_keys: Vec::with_capacity(d_bar),
            trunk_nonkeys: Vec::with_capacity(d_bar),
            branch_keys: Vec::with_capacity(d_bar - 1),
            branch_nonkeys: Vec::with_capacity(d_bar - 1),
            final_keys: Vec::with_capacity(d_bar),
            final_nonkeys: Vec::with_capacity(d_bar),
            boundaries: Vec::with_capacity(d_bar),
        };

        for d in 0..d_bar {
            profile.trunk_keys.push(key_alive.len() as u64);
            profile.trunk_nonkeys.push(nonkey_alive.len() as u64);

            // region masses if this depth were the last
            let ks: Vec<f64> = key_alive.iter().map(|&i| key_scores[d][i]).collect();
            let ns: Vec<f64> = nonkey_alive.iter().map(|&i| nonkey_scores[d][i]).collect();
            let boundaries = kl_partition(&ks, &ns, num_regions, segments)?;
            profile
                .final_keys
                .push(region_counts(&ks, &boundaries, num_regions));
            profile
                .final_nonkeys
                .push(region_counts(&ns, &boundaries, num_regions));
            profile.boundaries.push(boundaries);

            if d + 1 < d_bar {
                let th = theta[d];
                let kb = key_alive.iter().filter(|&&i| key_scores[d][i] >= th).count();
                let nb = nonkey_alive
                    .iter()
                    .filter(|&&i| nonkey_scores[d][i] >= th)
                    .count();
                profile.branch_keys.push(kb as u64);
                profile.branch_nonkeys.push(nb as u64);
                key_alive.retain(|&i| key_scores[d][i] < th);
                nonkey_alive.retain(|&i| nonkey_scores[d][i] < th);
            }
        }
        Ok(profile)
    }

    /// Score both validation sets and measure in one step.
    pub fn measure_from_ensemble<T: Scalar>(
        ensemble: &BoostedEnsemble<T>,
        val_keys: &Matrix<T>,
        val_nonkeys: &Matrix<T>,
        theta: &[f64],
        num_regions: usize,
        segments: usize,
    ) -> Result<Self> {
        let key_scores = ensemble.score_matrix(val_keys);
        let nonkey_scores = ensemble.score_matrix(val_nonkeys);
        Self::measure(&key_scores, &nonkey_scores, theta, num_regions, segments)
    }

    /// Zero-depth placeholder embedded in degenerate (classical) builds.
    pub fn trivial(n_keys: u64, n_nonkeys: u64) -> Self {
        DepthProfile {
            depth_count: 0,
            num_regions: 0,
            n_keys,
            n_nonkeys,
            theta: vec![],
            trunk_keys: vec![],
            trunk_nonkeys: vec![],
            branch_keys: vec![],
            branch_nonkeys: vec![],
            final_keys: vec![],
            final_nonkeys: vec![],
            boundaries: vec![],
        }
    }

    pub fn depth_count(&self) -> usize {
        self.depth_count
    }

    pub fn num_regions(&self) -> usize {
        self.num_regions
    }

    pub fn n_keys(&self) -> u64 {
        self.n_keys
    }

    pub fn n_nonkeys(&self) -> u64 {
        self.n_nonkeys
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Fraction of keys reaching the trunk filter at `depth` (0-based).
    pub fn trunk_key_frac(&self, depth: usize) -> f64 {
        self.trunk_keys[depth] as f64 / self.n_keys as f64
    }

    pub fn trunk_nonkey_frac(&self, depth: usize) -> f64 {
        safe_frac(self.trunk_nonkeys[depth], self.n_nonkeys)
    }

    /// Fraction of keys branching out at `depth` (0-based).
    pub fn branch_key_frac(&self, depth: usize) -> f64 {
        self.branch_keys[depth] as f64 / self.n_keys as f64
    }

    pub fn branch_nonkey_frac(&self, depth: usize) -> f64 {
        safe_frac(self.branch_nonkeys[depth], self.n_nonkeys)
    }

    /// Fraction of keys landing in region `k` if `depth` is the last.
    pub fn final_key_frac(&self, depth: usize, k: usize) -> f64 {
        self.final_keys[depth][k] as f64 / self.n_keys as f64
    }

    pub fn final_nonkey_frac(&self, depth: usize, k: usize) -> f64 {
        safe_frac(self.final_nonkeys[depth][k], self.n_nonkeys)
    }

    /// Exact integer routing counts (used by tests and diagnostics).
    pub fn trunk_key_count(&self, depth: usize) -> u64 {
        self.trunk_keys[depth]
    }

    pub fn branch_key_count(&self, depth: usize) -> u64 {
        self.branch_keys[depth]
    }

    pub fn trunk_nonkey_count(&self, depth: usize) -> u64 {
        self.trunk_nonkeys[depth]
    }

    pub fn branch_nonkey_count(&self, depth: usize) -> u64 {
        self.branch_nonkeys[depth]
    }

    pub fn final_key_count(&self, depth: usize, k: usize) -> u64 {
        self.final_keys[depth][k]
    }

    pub fn final_nonkey_count(&self, depth: usize, k: usize) -> u64 {
        self.final_nonkeys[depth][k]
    }

    /// Serialize for embedding in built-filter containers.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.depth_count as u32).to_le_bytes());
        out.extend_from_slice(&(self.num_regions as u32).to_le_bytes());
        out.extend_from_slice(&self.n_keys.to_le_bytes());
        out.extend_from_slice(&self.n_nonkeys.to_le_bytes());
        for t in &self.theta {
            out.extend_from_slice(&t.to_le_bytes());
        }
        for v in [&self.trunk_keys, &self.trunk_nonkeys, &self.branch_keys, &self.branch_nonkeys] {
            for c in v {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        for table in [&self.final_keys, &self.final_nonkeys] {
            for row in table {
                for c in row {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
        }
        for row in &self.boundaries {
            for b in row {
                out.extend_from_slice(&b.to_le_bytes());
            }
        }
        out
    }

    pub(crate) fn read(r: &mut crate::bloom::Reader) -> Result<Self> {
        let depth_count = r.u32()? as usize;
        let num_regions = r.u32()? as usize;
        let n_keys = r.u64()?;
        let n_nonkeys = r.u64()?;
        let branch_len = depth_count.saturating_sub(1);
        let mut theta = Vec::with_capacity(branch_len);
        for _ in 0..branch_len {
            theta.push(r.f64()?);
        }
        let read_u64s = |n: usize, r: &mut crate::bloom::Reader| -> Result<Vec<u64>> {
            (0..n).map(|_| r.u64()).collect()
        };
        let trunk_keys = read_u64s(depth_count, r)?;
        let trunk_nonkeys = read_u64s(depth_count, r)?;
        let branch_keys = read_u64s(branch_len, r)?;
        let branch_nonkeys = read_u64s(branch_len, r)?;
        let read_table = |r: &mut crate::bloom::Reader| -> Result<Vec<Vec<u64>>> {
            (0..depth_count)
                .map(|_| (0..num_regions).map(|_| r.u64()).collect())
                .collect()
        };
        let final_keys = read_table(r)?;
        let final_nonkeys = read_table(r)?;
        let mut boundaries = Vec::with_capacity(depth_count);
        for _ in 0..depth_count {
            let mut row = Vec::with_capacity(num_regions + 1);
            for _ in 0..num_regions + 1 {
                row.push(r.f64()?);
            }
            boundaries.push(row);
        }
        Ok(DepthProfile {
            depth_count,
            num_regions,
            n_keys,
            n_nonkeys,
            theta,
            trunk_keys,
            trunk_nonkeys,
            branch_keys,
            branch_nonkeys,
            final_keys,
            final_nonkeys,
            boundaries,
        })
    }
}

fn safe_frac(count: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

fn region_counts(scores: &[f64], boundaries: &[f64], k: usize) -> Vec<u64> {
    let mut counts = vec![0u64; k];
    for &s in scores {
        counts[region_index(boundaries, s)] += 1;
    }
    counts
}

/// Region of `s` under lower-inclusive half-open intervals; `s = 1` maps to
/// the last region.
pub fn region_index(boundaries: &[f64], s: f64) -> usize {
    let k = boundaries.len() - 1;
    // count of interior boundaries <= s
    let mut idx = boundaries[1..k].partition_point(|&t| t <= s);
    if idx >= k {
        idx = k - 1;
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn score_matrix_from(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        rows
    }

    #[test]
    fn quantile_threshold_matches_order_statistic() {
        // ten scores 0.1..1.0; alpha = 0.5 puts theta at 0.6 with five at
        // or above it
        let scores: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let matrix = score_matrix_from(vec![scores.clone(), scores.clone()]);
        let theta = candidate_thresholds(&matrix, 0.5).unwrap();
        assert_eq!(theta.len(), 1);
        assert_eq!(theta[0], 0.6);
        assert_eq!(scores.iter().filter(|&&s| s >= theta[0]).count(), 5);
    }

    #[test]
    fn alpha_zero_sits_above_every_nonkey() {
        let scores = vec![0.2, 0.9, 0.5];
        let matrix = score_matrix_from(vec![scores.clone(), scores.clone()]);
        let theta = candidate_thresholds(&matrix, 0.0).unwrap();
        assert!(theta[0] > 0.9);
        assert!(scores.iter().all(|&s| s < theta[0]));
    }

    #[test]
    fn alpha_one_rejected() {
        let matrix = score_matrix_from(vec![vec![0.5], vec![0.5]]);
        assert!(candidate_thresholds(&matrix, 1.0).is_err());
        assert!(candidate_thresholds(&matrix, -0.1).is_err());
    }

    #[test]
    fn empty_scores_rejected() {
        assert!(candidate_thresholds(&[], 0.1).is_err());
        assert!(candidate_thresholds(&[vec![]], 0.1).is_err());
    }

    #[test]
    fn attrition_halves_survivors() {
        // deterministic scores: depth-invariant uniform grid; alpha = 0.5
        // halves the surviving non-keys at every depth
        let n = 64;
        let base: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let matrix = vec![base.clone(), base.clone(), base.clone(), base.clone()];
        let theta = candidate_thresholds(&matrix, 0.5).unwrap();
        let profile = DepthProfile::measure(&matrix, &matrix, &theta, 2, 10).unwrap();
        assert_eq!(profile.trunk_nonkey_count(0), 64);
        assert_eq!(profile.trunk_nonkey_count(1), 32);
        assert_eq!(profile.trunk_nonkey_count(2), 16);
        assert_eq!(profile.trunk_nonkey_count(3), 8);
    }

    #[test]
    fn conservation_exact_on_random_input() {
        let mut rng = SplitMix64::new(9);
        let d_bar = 6;
        let n_keys = 500;
        let n_nonkeys = 700;
        let gen = |rng: &mut SplitMix64, n: usize| -> Vec<Vec<f64>> {
            (0..d_bar)
                .map(|_| (0..n).map(|_| rng.next_f64()).collect())
                .collect()
        };
        let key_scores = gen(&mut rng, n_keys);
        let nonkey_scores = gen(&mut rng, n_nonkeys);
        let theta = candidate_thresholds(&nonkey_scores, 0.3).unwrap();
        let p = DepthProfile::measure(&key_scores, &nonkey_scores, &theta, 3, 50).unwrap();

        assert_eq!(p.trunk_key_count(0), n_keys as u64);
        assert_eq!(p.trunk_nonkey_count(0), n_nonkeys as u64);
        for d in 0..d_bar - 1 {
            assert_eq!(
                p.trunk_key_count(d),
                p.trunk_key_count(d + 1) + p.branch_key_count(d),
                "key conservation at depth {d}"
            );
            assert_eq!(
                p.trunk_nonkey_count(d),
                p.trunk_nonkey_count(d + 1) + p.branch_nonkey_count(d),
                "non-key conservation at depth {d}"
            );
        }
        // region masses partition the survivors at every depth
        for d in 0..d_bar {
            let key_sum: u64 = (0..3).map(|k| p.final_key_count(d, k)).sum();
            let nonkey_sum: u64 = (0..3).map(|k| p.final_nonkey_count(d, k)).sum();
            assert_eq!(key_sum, p.trunk_key_count(d));
            assert_eq!(nonkey_sum, p.trunk_nonkey_count(d));
        }
        // all fractions in [0, 1]
        for d in 0..d_bar {
            for f in [p.trunk_key_frac(d), p.trunk_nonkey_frac(d)] {
                assert!((0.0..=1.0).contains(&f));
            }
        }
    }

    #[test]
    fn alpha_zero_measures_no_nonkey_branching() {
        let mut rng = SplitMix64::new(21);
        let scores: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..300).map(|_| rng.next_f64()).collect())
            .collect();
        let theta = candidate_thresholds(&scores, 0.0).unwrap();
        let p = DepthProfile::measure(&scores, &scores, &theta, 2, 20).unwrap();
        for d in 0..4 {
            assert_eq!(p.branch_nonkey_count(d), 0, "non-key branched at depth {d}");
        }
        // key and non-key sets coincide here, so keys do not branch either
        // and everything reaches the last depth
        assert_eq!(p.trunk_nonkey_count(4), 300);
    }

    #[test]
    fn unreachable_thresholds_route_everyone_to_final() {
        let scores = vec![vec![0.4, 0.6], vec![0.5, 0.7], vec![0.2, 0.9]];
        let theta = vec![UNREACHABLE_THRESHOLD; 2];
        let p = DepthProfile::measure(&scores, &scores, &theta, 2, 10).unwrap();
        for d in 0..3 {
            assert_eq!(p.trunk_key_count(d), 2);
        }
        assert_eq!(p.branch_key_count(0), 0);
        assert_eq!(p.branch_key_count(1), 0);
    }

    #[test]
    fn region_index_boundary_rules() {
        let b = vec![0.0, 0.5, 1.0];
        assert_eq!(region_index(&b, 0.2), 0);
        assert_eq!(region_index(&b, 0.5), 1); // lower-inclusive
        assert_eq!(region_index(&b, 1.0), 1); // top closure
        assert_eq!(region_index(&b, 0.0), 0);

        let b3 = vec![0.0, 0.25, 0.75, 1.0];
        assert_eq!(region_index(&b3, 0.25), 1);
        assert_eq!(region_index(&b3, 0.7499), 1);
        assert_eq!(region_index(&b3, 0.75), 2);
    }

    #[test]
    fn serialization_round_trip() {
        let mut rng = SplitMix64::new(4);
        let scores: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..50).map(|_| rng.next_f64()).collect())
            .collect();
        let theta = candidate_thresholds(&scores, 0.2).unwrap();
        let p = DepthProfile::measure(&scores, &scores, &theta, 3, 20).unwrap();
        let bytes = p.to_bytes();
        let mut reader = crate::bloom::Reader::new(&bytes);
        let q = DepthProfile::read(&mut reader).unwrap();
        assert_eq!(p, q);
    }
}
