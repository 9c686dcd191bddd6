//! The cascaded learned Bloom filter: configuration, build, query, and
//! analytic evaluation.
//!
//! A built cascade holds `D` trunk filters, `D - 1` branch filters, and `K`
//! final filters. Queries walk the trunk: at depth d the trunk filter can
//! reject outright; otherwise tree d refines the score, and the query
//! either terminates in a branch filter (score at or above the depth's
//! threshold), continues down, or — at depth D — terminates in the final
//! filter of its score region. Keys are inserted into every filter their
//! walk traverses, so stored keys can never be rejected.
//!
//! `depth = 0` degenerates to a single classical Bloom filter at the
//! target rate.

use crate::bloom::{theoretical_size_bits, BloomFilter, Reader};
use crate::dataset::Matrix;
use crate::error::{Error, Result};
use crate::gbdt::{BoostedEnsemble, ModelCosts};
use crate::hash::{derive_seed, prehash, role};
use crate::optimizer::profile::{region_index, DepthProfile};
use crate::scalar::Scalar;

/// Optimized cascade shape: depth, thresholds, and per-filter rates.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeConfig {
    depth: usize,
    branch_thresholds: Vec<f64>,
    trunk_fprs: Vec<f64>,
    branch_fprs: Vec<f64>,
    final_partition: Vec<f64>,
    final_fprs: Vec<f64>,
    f_target: f64,
    lambda: f64,
}

impl CascadeConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        depth: usize,
        branch_thresholds: Vec<f64>,
        trunk_fprs: Vec<f64>,
        branch_fprs: Vec<f64>,
        final_partition: Vec<f64>,
        final_fprs: Vec<f64>,
        f_target: f64,
        lambda: f64,
    ) -> Result<Self> {
        if !(f_target > 0.0 && f_target < 1.0) {
            return Err(Error::invalid(format!(
                "target fpr must be in (0, 1), got {f_target}"
            )));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::invalid(format!("lambda must be in [0, 1], got {lambda}")));
        }
        let cfg = CascadeConfig {
            depth,
            branch_thresholds,
            trunk_fprs,
            branch_fprs,
            final_partition,
            final_fprs,
            f_target,
            lambda,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Depth-0 fallback: one classical filter at the target rate.
    pub fn degenerate(f_target: f64, lambda: f64) -> Result<Self> {
        CascadeConfig::new(0, vec![], vec![], vec![], vec![], vec![], f_target, lambda)
    }

    fn validate(&self) -> Result<()> {
        let d = self.depth;
        if d == 0 {
            if !self.branch_thresholds.is_empty()
                || !self.trunk_fprs.is_empty()
                || !self.branch_fprs.is_empty()
                || !self.final_partition.is_empty()
                || !self.final_fprs.is_empty()
            {
                return Err(Error::invalid("degenerate config must have empty vectors"));
            }
            return Ok(());
        }
        if self.trunk_fprs.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: self.trunk_fprs.len() });
        }
        if self.branch_thresholds.len() != d - 1 {
            return Err(Error::DimensionMismatch {
                expected: d - 1,
                found: self.branch_thresholds.len(),
            });
        }
        if self.branch_fprs.len() != d - 1 {
            return Err(Error::DimensionMismatch {
                expected: d - 1,
                found: self.branch_fprs.len(),
            });
        }
        if self.final_partition.len() != self.final_fprs.len() + 1 {
            return Err(Error::invalid("partition must have one more boundary than regions"));
        }
        if self.final_fprs.is_empty() {
            return Err(Error::invalid("cascade needs at least one final region"));
        }
        if self.final_partition[0] != 0.0
            || *self.final_partition.last().unwrap() != 1.0
            || self.final_partition.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::invalid(
                "partition boundaries must ascend strictly from 0 to 1",
            ));
        }
        for f in self
            .trunk_fprs
            .iter()
            .chain(&self.branch_fprs)
            .chain(&self.final_fprs)
        {
            if !(*f > 0.0 && *f <= 1.0) {
                return Err(Error::invalid(format!("filter rate {f} outside (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_degenerate(&self) -> bool {
        self.depth == 0
    }

    pub fn num_regions(&self) -> usize {
        self.final_fprs.len()
    }

    pub fn branch_thresholds(&self) -> &[f64] {
        &self.branch_thresholds
    }

    pub fn trunk_fprs(&self) -> &[f64] {
        &self.trunk_fprs
    }

    pub fn branch_fprs(&self) -> &[f64] {
        &self.branch_fprs
    }

    pub fn final_partition(&self) -> &[f64] {
        &self.final_partition
    }

    pub fn final_fprs(&self) -> &[f64] {
        &self.final_fprs
    }

    pub fn f_target(&self) -> f64 {
        self.f_target
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Final-filter region of score `s` (0-based, lower-inclusive).
    pub fn final_region(&self, s: f64) -> usize {
        region_index(&self.final_partition, s)
    }
}

/// Expected structure memory in bits under the measured routing: model
/// bytes plus the analytic size of every filter at its configured rate.
pub fn analytic_memory_bits(
    config: &CascadeConfig,
    costs: &ModelCosts,
    profile: &DepthProfile,
) -> f64 {
    use crate::optimizer::dp::expected_filter_bits;
    let n = profile.n_keys() as f64;
    if config.is_degenerate() {
        return theoretical_size_bits(profile.n_keys(), config.f_target)
            .expect("valid target rate") as f64;
    }
    let d = config.depth;
    let mut bits = 8.0 * costs.prefix_bytes(d) as f64;
    for i in 0..d {
        bits += expected_filter_bits(profile.trunk_key_frac(i), config.trunk_fprs[i], n);
    }
    for i in 0..d - 1 {
        bits += expected_filter_bits(profile.branch_key_frac(i), config.branch_fprs[i], n);
    }
    for k in 0..config.num_regions() {
        bits += expected_filter_bits(profile.final_key_frac(d - 1, k), config.final_fprs[k], n);
    }
    bits
}

/// Expected model inference time per non-key query in nanoseconds:
/// `sum_i time_i * trunk_nonkey_frac_i * prod_{j<=i} trunk_fpr_j`.
pub fn analytic_reject_time_ns(
    config: &CascadeConfig,
    costs: &ModelCosts,
    profile: &DepthProfile,
) -> f64 {
    let mut total = 0.0;
    let mut survive = 1.0;
    for i in 0..config.depth {
        survive *= config.trunk_fprs[i];
        total += costs.time_ns[i] * profile.trunk_nonkey_frac(i) * survive;
    }
    total
}

/// Expected false positive rate under the measured routing.
pub fn analytic_fpr(config: &CascadeConfig, profile: &DepthProfile) -> f64 {
    if config.is_degenerate() {
        return config.f_target;
    }
    let d = config.depth;
    let mut total = 0.0;
    let mut survive = 1.0;
    for i in 0..d - 1 {
        survive *= config.trunk_fprs[i];
        total += profile.branch_nonkey_frac(i) * survive * config.branch_fprs[i];
    }
    survive *= config.trunk_fprs[d - 1];
    for k in 0..config.num_regions() {
        total += profile.final_nonkey_frac(d - 1, k) * survive * config.final_fprs[k];
    }
    total
}

/// Query outcome with the number of weak learners evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryStats {
    pub found: bool,
    pub model_evals: usize,
}

/// Built cascade: configuration, model, and all bit arrays.
#[derive(Debug, Clone)]
pub struct Clbf<T> {
    config: CascadeConfig,
    ensemble: BoostedEnsemble<T>,
    profile: DepthProfile,
    trunk: Vec<BloomFilter>,
    branch: Vec<BloomFilter>,
    finals: Vec<BloomFilter>,
    fallback: Option<BloomFilter>,
    key_count: u64,
}

impl<T: Scalar> Clbf<T> {
    /// Two-pass build: route every key through the branching walk to count
    /// per-filter arrivals, size each filter for its exact count, then
    /// insert every key into all filters on its walk.
    pub fn build(
        config: CascadeConfig,
        ensemble: BoostedEnsemble<T>,
        profile: DepthProfile,
        keys: &Matrix<T>,
        key_ids: &[Vec<u8>],
        run_seed: u64,
    ) -> Result<Self> {
        if keys.rows() != key_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: keys.rows(),
                found: key_ids.len(),
            });
        }
        let d = config.depth;
        if d > ensemble.num_trees() {
            return Err(Error::invalid(format!(
                "config depth {d} exceeds ensemble of {} trees",
                ensemble.num_trees()
            )));
        }
        if d > 0 && keys.cols() != ensemble.num_features() {
            return Err(Error::DimensionMismatch {
                expected: ensemble.num_features(),
                found: keys.cols(),
            });
        }
        let n = keys.rows() as u64;

        if d == 0 {
            let mut fallback =
                BloomFilter::new(n, config.f_target, derive_seed(run_seed, role::SOLO, 0))?;
            for id in key_ids {
                fallback.insert(id);
            }
            return Ok(Clbf {
                config,
                ensemble,
                profile,
                trunk: vec![],
                branch: vec![],
                finals: vec![],
                fallback: Some(fallback),
                key_count: n,
            });
        }

        // pass 1: count arrivals at every filter
        let mut trunk_counts = vec![0u64; d];
        let mut branch_counts = vec![0u64; d - 1];
        let mut final_counts = vec![0u64; config.num_regions()];
        for i in 0..keys.rows() {
            let mut cursor = ensemble.score_cursor(keys.row(i));
            for depth in 0..d {
                trunk_counts[depth] += 1;
                let s = cursor.advance();
                if depth + 1 == d {
                    final_counts[config.final_region(s)] += 1;
                    break;
                }
                if s >= config.branch_thresholds[depth] {
                    branch_counts[depth] += 1;
                    break;
                }
            }
        }

        // pass 2: allocate for the exact counts and insert
        let mut trunk = Vec::with_capacity(d);
        for (i, &count) in trunk_counts.iter().enumerate() {
            trunk.push(BloomFilter::new(
                count,
                config.trunk_fprs[i],
                derive_seed(run_seed, role::TRUNK, i as u64 + 1),
            )?);
        }
        let mut branch = Vec::with_capacity(d - 1);
        for (i, &count) in branch_counts.iter().enumerate() {
            branch.push(BloomFilter::new(
                count,
                config.branch_fprs[i],
                derive_seed(run_seed, role::BRANCH, i as u64 + 1),
            )?);
        }
        let mut finals = Vec::with_capacity(config.num_regions());
        for (k, &count) in final_counts.iter().enumerate() {
            finals.push(BloomFilter::new(
                count,
                config.final_fprs[k],
                derive_seed(run_seed, role::FINAL, k as u64 + 1),
            )?);
        }
        for i in 0..keys.rows() {
            let ph = prehash(&key_ids[i]);
            let mut cursor = ensemble.score_cursor(keys.row(i));
            for depth in 0..d {
                trunk[depth].insert_prehashed(ph);
                let s = cursor.advance();
                if depth + 1 == d {
                    finals[config.final_region(s)].insert_prehashed(ph);
                    break;
                }
                if s >= config.branch_thresholds[depth] {
                    branch[depth].insert_prehashed(ph);
                    break;
                }
            }
        }

        Ok(Clbf {
            config,
            ensemble,
            profile,
            trunk,
            branch,
            finals,
            fallback: None,
            key_count: n,
        })
    }

    pub fn query(&self, features: &[T], identity: &[u8]) -> bool {
        self.query_with_stats(features, identity).found
    }

    /// Query and report how many weak learners ran before the answer.
    pub fn query_with_stats(&self, features: &[T], identity: &[u8]) -> QueryStats {
        let ph = prehash(identity);
        if let Some(fallback) = &self.fallback {
            return QueryStats {
                found: fallback.contains_prehashed(ph),
                model_evals: 0,
            };
        }
        let d = self.config.depth;
        let mut cursor = self.ensemble.score_cursor(features);
        for depth in 0..d {
            if !self.trunk[depth].contains_prehashed(ph) {
                return QueryStats {
                    found: false,
                    model_evals: depth,
                };
            }
            let s = cursor.advance();
            if depth + 1 == d {
                return QueryStats {
                    found: self.finals[self.config.final_region(s)].contains_prehashed(ph),
                    model_evals: depth + 1,
                };
            }
            if s >= self.config.branch_thresholds[depth] {
                return QueryStats {
                    found: self.branch[depth].contains_prehashed(ph),
                    model_evals: depth + 1,
                };
            }
        }
        unreachable!("walk always terminates at a filter")
    }

    pub fn config(&self) -> &CascadeConfig {
        &self.config
    }

    pub fn ensemble(&self) -> &BoostedEnsemble<T> {
        &self.ensemble
    }

    pub fn profile(&self) -> &DepthProfile {
        &self.profile
    }

    pub fn key_count(&self) -> u64 {
        self.key_count
    }

    /// Model bytes actually used (prefix of `depth` trees).
    pub fn model_bytes(&self) -> usize {
        (1..=self.config.depth)
            .map(|d| self.ensemble.tree_size_bytes(d).expect("depth checked at build"))
            .sum()
    }

    /// Total filter payload in bits.
    pub fn filter_bits(&self) -> u64 {
        self.all_filters().map(|f| f.size_bits()).sum()
    }

    /// Structure memory: model bytes plus byte-padded filter payloads.
    pub fn total_bytes(&self) -> u64 {
        self.model_bytes() as u64
            + self
                .all_filters()
                .map(|f| f.size_bits().div_ceil(8))
                .sum::<u64>()
    }

    fn all_filters(&self) -> impl Iterator<Item = &BloomFilter> {
        self.trunk
            .iter()
            .chain(&self.branch)
            .chain(&self.finals)
            .chain(&self.fallback)
    }

    /// Serialize: magic `CLBF-V1`, config block, routing profile, model,
    /// then every filter payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        let c = &self.config;
        out.extend_from_slice(&(c.depth as u32).to_le_bytes());
        out.extend_from_slice(&(c.num_regions() as u32).to_le_bytes());
        out.extend_from_slice(&c.f_target.to_le_bytes());
        out.extend_from_slice(&c.lambda.to_le_bytes());
        for v in [
            &c.branch_thresholds,
            &c.trunk_fprs,
            &c.branch_fprs,
            &c.final_partition,
            &c.final_fprs,
        ] {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out.extend_from_slice(&self.key_count.to_le_bytes());
        out.extend_from_slice(&self.profile.to_bytes());
        out.push(self.fallback.is_some() as u8);
        if self.fallback.is_none() {
            out.extend_from_slice(&self.ensemble.to_bytes());
        }
        for f in self.all_filters() {
            out.extend_from_slice(&f.to_bytes());
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        r.magic(MAGIC)?;
        let depth = r.u32()? as usize;
        let num_regions = r.u32()? as usize;
        let f_target = r.f64()?;
        let lambda = r.f64()?;
        let read_f64s = |n: usize, r: &mut Reader| -> Result<Vec<f64>> {
            (0..n).map(|_| r.f64()).collect()
        };
        let branch_thresholds = read_f64s(depth.saturating_sub(1), &mut r)?;
        let trunk_fprs = read_f64s(depth, &mut r)?;
        let branch_fprs = read_f64s(depth.saturating_sub(1), &mut r)?;
        let (final_partition, final_fprs) = if depth == 0 {
            (vec![], vec![])
        } else {
            (
                read_f64s(num_regions + 1, &mut r)?,
                read_f64s(num_regions, &mut r)?,
            )
        };
        let config = CascadeConfig::new(
            depth,
            branch_thresholds,
            trunk_fprs,
            branch_fprs,
            final_partition,
            final_fprs,
            f_target,
            lambda,
        )?;
        let key_count = r.u64()?;
        let profile = DepthProfile::read(&mut r)?;
        let has_fallback = r.u8()? != 0;
        let ensemble = if has_fallback {
            // degenerate builds carry no model; a placeholder keeps the type
            BoostedEnsemble::from_trees(vec![crate::gbdt::Tree::leaf(T::zero())], 0.0, 1.0, 0)?
        } else {
            let (ens, used) = BoostedEnsemble::from_bytes(&buf[r.consumed()..])?;
            r.bytes(used)?;
            ens
        };
        let read_filters = |n: usize, r: &mut Reader| -> Result<Vec<BloomFilter>> {
            (0..n)
                .map(|_| {
                    let (f, used) = BloomFilter::from_bytes(&buf[r.consumed()..])?;
                    r.bytes(used)?;
                    Ok(f)
                })
                .collect()
        };
        let trunk = read_filters(depth, &mut r)?;
        let branch = read_filters(depth.saturating_sub(1), &mut r)?;
        let finals = read_filters(if depth == 0 { 0 } else { num_regions }, &mut r)?;
        let fallback = if has_fallback {
            Some(read_filters(1, &mut r)?.pop().unwrap())
        } else {
            None
        };
        Ok(Clbf {
            config,
            ensemble,
            profile,
            trunk,
            branch,
            finals,
            fallback,
            key_count,
        })
    }
}

const MAGIC: &[u8] = b"CLBF-V1";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::LabeledDataset;
    use crate::gbdt::TrainParams;
    use crate::optimizer::profile::candidate_thresholds;

    fn small_world() -> (LabeledDataset<f64>, BoostedEnsemble<f64>, DepthProfile) {
        let ds = LabeledDataset::<f64>::gen_separation(1.5, 600, 900, 8, 42).unwrap();
        let params = TrainParams {
            rounds: 6,
            max_depth: 3,
            ..Default::default()
        };
        let ens = BoostedEnsemble::train(&ds.keys, &ds.nonkeys, &params).unwrap();
        let nonkey_scores = ens.score_matrix(&ds.nonkeys);
        let key_scores = ens.score_matrix(&ds.keys);
        let theta = candidate_thresholds(&nonkey_scores, 0.2).unwrap();
        let profile = DepthProfile::measure(&key_scores, &nonkey_scores, &theta, 3, 50).unwrap();
        (ds, ens, profile)
    }

    fn manual_config(depth: usize, profile: &DepthProfile) -> CascadeConfig {
        CascadeConfig::new(
            depth,
            profile.theta()[..depth - 1].to_vec(),
            vec![0.5; depth],
            vec![0.1; depth - 1],
            profile.boundaries[depth - 1].clone(),
            vec![0.01; 3],
            0.01,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(CascadeConfig::degenerate(0.01, 0.5).is_ok());
        assert!(CascadeConfig::degenerate(0.0, 0.5).is_err());
        assert!(CascadeConfig::degenerate(1.0, 0.5).is_err());
        assert!(CascadeConfig::degenerate(0.01, 1.5).is_err());
        // mismatched vector lengths
        assert!(CascadeConfig::new(
            2,
            vec![0.5],
            vec![0.5],
            vec![0.5],
            vec![0.0, 1.0],
            vec![0.01],
            0.01,
            1.0
        )
        .is_err());
        // descending partition
        assert!(CascadeConfig::new(
            1,
            vec![],
            vec![0.5],
            vec![],
            vec![0.0, 0.7, 0.6, 1.0],
            vec![0.1, 0.1, 0.1],
            0.01,
            1.0
        )
        .is_err());
    }

    #[test]
    fn no_false_negatives_across_depths() {
        let (ds, ens, profile) = small_world();
        for depth in [1usize, 2, 4, 6] {
            let config = manual_config(depth, &profile);
            let clbf = Clbf::build(
                config,
                ens.clone(),
                profile.clone(),
                &ds.keys,
                ds.key_identities(),
                7,
            )
            .unwrap();
            for i in 0..ds.num_keys() {
                assert!(
                    clbf.query(ds.keys.row(i), ds.key_identity(i)),
                    "stored key rejected at depth {depth}"
                );
            }
        }
    }

    #[test]
    fn degenerate_build_is_single_classical_filter() {
        let (ds, ens, _) = small_world();
        let config = CascadeConfig::degenerate(0.01, 1.0).unwrap();
        let profile = DepthProfile::trivial(ds.num_keys() as u64, ds.num_nonkeys() as u64);
        let clbf = Clbf::build(config, ens, profile, &ds.keys, ds.key_identities(), 7).unwrap();
        assert_eq!(clbf.model_bytes(), 0);
        assert_eq!(
            clbf.filter_bits(),
            theoretical_size_bits(ds.num_keys() as u64, 0.01).unwrap()
        );
        for i in 0..ds.num_keys() {
            assert!(clbf.query(ds.keys.row(i), ds.key_identity(i)));
        }
        // identical answers to a directly built classical filter (same seed)
        let mut classic =
            BloomFilter::new(ds.num_keys() as u64, 0.01, derive_seed(7, role::SOLO, 0)).unwrap();
        for id in ds.key_identities() {
            classic.insert(id);
        }
        for i in 0..ds.num_nonkeys() {
            let id = ds.nonkey_identity(i);
            assert_eq!(clbf.query(ds.nonkeys.row(i), id), classic.contains(id));
        }
    }

    #[test]
    fn rejected_nonkeys_can_skip_the_model_entirely() {
        let (ds, ens, profile) = small_world();
        let config = manual_config(3, &profile);
        let clbf =
            Clbf::build(config, ens, profile, &ds.keys, ds.key_identities(), 11).unwrap();
        let mut zero_eval_rejects = 0usize;
        for i in 0..ds.num_nonkeys() {
            let stats = clbf.query_with_stats(ds.nonkeys.row(i), ds.nonkey_identity(i));
            if !stats.found && stats.model_evals == 0 {
                zero_eval_rejects += 1;
            }
            assert!(stats.model_evals <= 3);
        }
        // trunk rate 0.5 at depth 1 rejects about half before any inference
        let frac = zero_eval_rejects as f64 / ds.num_nonkeys() as f64;
        assert!(frac > 0.3, "zero-eval fraction {frac}");
    }

    #[test]
    fn analytic_fpr_hits_budget_when_rates_unclamped() {
        use crate::optimizer::dp::optimal_terminal_fpr;
        let (_, _, profile) = small_world();
        let f_target = 0.01;
        let depth = 3;
        let mut branch_fprs = Vec::new();
        for d in 0..depth - 1 {
            branch_fprs.push(optimal_terminal_fpr(
                profile.branch_key_frac(d),
                profile.branch_nonkey_frac(d),
                f_target,
            ));
        }
        let final_fprs: Vec<f64> = (0..3)
            .map(|k| {
                optimal_terminal_fpr(
                    profile.final_key_frac(depth - 1, k),
                    profile.final_nonkey_frac(depth - 1, k),
                    f_target,
                )
            })
            .collect();
        // with all trunk rates at 1 and no clamps, the budget is met exactly
        if branch_fprs.iter().chain(&final_fprs).all(|&f| f < 1.0 && f > 0.0) {
            let config = CascadeConfig::new(
                depth,
                profile.theta()[..depth - 1].to_vec(),
                vec![1.0; depth],
                branch_fprs,
                profile.boundaries[depth - 1].clone(),
                final_fprs,
                f_target,
                1.0,
            )
            .unwrap();
            let fpr = analytic_fpr(&config, &profile);
            assert!(
                (fpr - f_target).abs() < 1e-12,
                "unclamped rates should hit the budget exactly: {fpr}"
            );
        }
    }

    #[test]
    fn analytic_reject_time_linear_in_rates() {
        let (_, _, profile) = small_world();
        let costs = ModelCosts {
            size_bytes: vec![100; 6],
            time_ns: vec![100.0, 50.0, 25.0, 10.0, 5.0, 1.0],
        };
        let mk = |f1: f64| {
            CascadeConfig::new(
                1,
                vec![],
                vec![f1],
                vec![],
                profile.boundaries[0].clone(),
                vec![0.01, 0.01, 0.01],
                0.01,
                0.5,
            )
            .unwrap()
        };
        let t1 = analytic_reject_time_ns(&mk(0.5), &costs, &profile);
        assert!((t1 - 100.0 * 1.0 * 0.5).abs() < 1e-12);
        let t2 = analytic_reject_time_ns(&mk(1.0), &costs, &profile);
        assert!((t2 - 2.0 * t1).abs() < 1e-12, "doubling the rate doubles the term");
        // degenerate: no model, no reject time; fpr pinned at the target
        let d0 = CascadeConfig::degenerate(0.01, 1.0).unwrap();
        assert_eq!(analytic_reject_time_ns(&d0, &costs, &profile), 0.0);
        assert_eq!(analytic_fpr(&d0, &profile), 0.01);
    }

    #[test]
    fn serialization_round_trip_answers_identically() {
        let (ds, ens, profile) = small_world();
        let config = manual_config(4, &profile);
        let clbf = Clbf::build(config, ens, profile, &ds.keys, ds.key_identities(), 3).unwrap();
        let bytes = clbf.to_bytes();
        let back = Clbf::<f64>::from_bytes(&bytes).unwrap();
        assert_eq!(clbf.config(), back.config());
        assert_eq!(clbf.filter_bits(), back.filter_bits());
        for i in 0..ds.num_keys() {
            assert!(back.query(ds.keys.row(i), ds.key_identity(i)));
        }
        for i in 0..ds.num_nonkeys() {
            assert_eq!(
                clbf.query_with_stats(ds.nonkeys.row(i), ds.nonkey_identity(i)),
                back.query_with_stats(ds.nonkeys.row(i), ds.nonkey_identity(i))
            );
        }
    }

    #[test]
    fn degenerate_serialization_round_trip() {
        let (ds, ens, _) = small_world();
        let config = CascadeConfig::degenerate(0.02, 0.0).unwrap();
        let profile = DepthProfile::trivial(ds.num_keys() as u64, ds.num_nonkeys() as u64);
        let clbf = Clbf::build(config, ens, profile, &ds.keys, ds.key_identities(), 5).unwrap();
        let back = Clbf::<f64>::from_bytes(&clbf.to_bytes()).unwrap();
        assert!(back.config().is_degenerate());
        for i in 0..ds.num_keys() {
            assert!(back.query(ds.keys.row(i), ds.key_identity(i)));
        }
    }

    #[test]
    fn built_cascade_is_shareable_across_reader_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Clbf<f64>>();
        assert_send_sync::<Clbf<f32>>();
        assert_send_sync::<BloomFilter>();

        let (ds, ens, profile) = small_world();
        let clbf = std::sync::Arc::new(
            Clbf::build(
                manual_config(2, &profile),
                ens,
                profile.clone(),
                &ds.keys,
                ds.key_identities(),
                13,
            )
            .unwrap(),
        );
        let ds = std::sync::Arc::new(ds);
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let clbf = clbf.clone();
                let ds = ds.clone();
                std::thread::spawn(move || {
                    (0..ds.num_keys())
                        .all(|i| clbf.query(ds.keys.row(i), ds.key_identity(i)))
                })
            })
            .collect();
        for h in handles {
            assert!(h.join().unwrap());
        }
    }

    #[test]
    fn build_rejects_depth_beyond_ensemble() {
        let (ds, ens, profile) = small_world();
        let config = CascadeConfig::new(
            7,
            vec![2.0; 6],
            vec![0.5; 7],
            vec![0.5; 6],
            profile.boundaries[2].clone(),
            vec![0.1, 0.1, 0.1],
            0.01,
            1.0,
        )
        .unwrap();
        assert!(Clbf::build(config, ens, profile, &ds.keys, ds.key_identities(), 1).is_err());
    }
}
