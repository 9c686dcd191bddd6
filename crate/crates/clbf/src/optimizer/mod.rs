//! Configuration search: threshold candidates, routing measurement, the
//! dynamic program, and selection of the best plan across the candidate
//! grid (including the no-model fallback).
//!
//! The search is scalarized by `lambda`: memory is scaled by the size of a
//! classical Bloom filter built for the same keys and budget, expected
//! reject time by that filter's measured reject latency, and the weighted
//! sum is minimized subject to the analytic false positive rate staying
//! within the budget (guaranteed by construction of the terminal rates).

pub mod dp;
pub mod kl;
pub mod profile;

pub use dp::{evaluate_assignment, optimal_terminal_fpr, run_dp, DpOutcome, DpTraceRow};
pub use kl::kl_partition;
pub use profile::{candidate_thresholds, DepthProfile};

use std::time::Instant;

use crate::bloom::{theoretical_size_bits, BloomFilter};
use crate::cascade::CascadeConfig;
use crate::dataset::Matrix;
use crate::error::{Error, Result};
use crate::gbdt::{BoostedEnsemble, ModelCosts};
use crate::scalar::Scalar;

/// The branch-quantile ladder evaluated by default: a 5-2-1 decade ladder
/// from 0.5 down to 1e-4, plus 0 (no non-key ever branches).
pub fn standard_alpha_grid() -> Vec<f64> {
    vec![
        0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001, 0.0005, 0.0002, 0.0001, 0.0,
    ]
}

/// Search hyperparameters and scaling constants.
#[derive(Debug, Clone)]
pub struct OptimizerParams {
    /// Overall false positive budget F, in (0, 1).
    pub f_target: f64,
    /// Memory/time trade-off weight: 1 = memory only, 0 = reject time only.
    pub lambda: f64,
    /// Base of the trunk-rate grid (rates are powers of this).
    pub survive_base: f64,
    /// Number of grid steps P; trunk rates range over p^0 .. p^(P-1).
    pub grid_size: usize,
    /// Number of final score regions K.
    pub num_regions: usize,
    /// Histogram resolution for the score partition.
    pub segments: usize,
    /// Branch-quantile candidates.
    pub alpha_grid: Vec<f64>,
    /// Classical-filter size in bits at (n, F); memory scale.
    pub mem_scale_bits: f64,
    /// Classical-filter reject latency in ns; time scale.
    pub time_scale_ns: f64,
}

impl OptimizerParams {
    pub fn new(f_target: f64, lambda: f64, mem_scale_bits: f64, time_scale_ns: f64) -> Self {
        OptimizerParams {
            f_target,
            lambda,
            survive_base: 0.5,
            grid_size: 20,
            num_regions: 5,
            segments: 100,
            alpha_grid: standard_alpha_grid(),
            mem_scale_bits,
            time_scale_ns,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_target > 0.0 && self.f_target < 1.0) {
            return Err(Error::invalid("target fpr must be in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid("lambda must be in [0, 1]"));
        }
        if !(self.survive_base > 0.0 && self.survive_base < 1.0) {
            return Err(Error::invalid("rate grid base must be in (0, 1)"));
        }
        if self.grid_size < 1 {
            return Err(Error::invalid("rate grid needs at least one step"));
        }
        if self.num_regions < 1 {
            return Err(Error::invalid("need at least one final region"));
        }
        if self.segments < self.num_regions {
            return Err(Error::invalid("segments must be >= regions"));
        }
        if self.alpha_grid.is_empty() {
            return Err(Error::invalid("alpha grid must not be empty"));
        }
        if self.alpha_grid.iter().any(|a| !(0.0..1.0).contains(a)) {
            return Err(Error::invalid("alpha values must be in [0, 1)"));
        }
        if !self.mem_scale_bits.is_finite()
            || self.mem_scale_bits <= 0.0
            || !self.time_scale_ns.is_finite()
            || self.time_scale_ns <= 0.0
        {
            return Err(Error::invalid("scaling constants must be positive"));
        }
        Ok(())
    }
}

/// Memory and measured-latency scaling constants from a classical filter
/// built for the same keys and budget.
///
/// The memory scale is the analytic bit count; the time scale is the mean
/// wall-clock of at least `min_queries` (>= 1e5 recommended) membership
/// checks for non-keys against a freshly built filter.
pub fn measure_scaling_constants(
    key_ids: &[Vec<u8>],
    nonkey_ids: &[Vec<u8>],
    f_target: f64,
    seed: u64,
    min_queries: usize,
) -> Result<(f64, f64)> {
    if key_ids.is_empty() || nonkey_ids.is_empty() {
        return Err(Error::invalid(
            "scaling constants need keys and non-keys to measure against",
        ));
    }
    let n = key_ids.len() as u64;
    let mem_scale_bits = theoretical_size_bits(n, f_target)? as f64;
    let mut filter = BloomFilter::new(n, f_target, crate::hash::derive_seed(seed, crate::hash::role::SOLO, 0))?;
    for id in key_ids {
        filter.insert(id);
    }
    // warm up, then time whole sweeps over the non-key list
    let mut hits = 0usize;
    for id in nonkey_ids.iter().take(10_000) {
        hits += filter.contains(id) as usize;
    }
    std::hint::black_box(hits);
    let sweeps = min_queries.div_ceil(nonkey_ids.len()).max(1);
    let start = Instant::now();
    let mut found = 0usize;
    for _ in 0..sweeps {
        for id in nonkey_ids {
            found += filter.contains(id) as usize;
        }
    }
    std::hint::black_box(found);
    let total = (sweeps * nonkey_ids.len()) as f64;
    let time_scale_ns = (start.elapsed().as_nanos() as f64 / total).max(0.01);
    Ok((mem_scale_bits, time_scale_ns))
}

/// One candidate in the threshold sweep: a quantile level and the routing
/// profile it induces.
#[derive(Debug, Clone)]
pub struct AlphaProfile {
    pub alpha: f64,
    pub profile: DepthProfile,
}

/// Chosen plan with its diagnostics.
#[derive(Debug, Clone)]
pub struct Optimized {
    pub config: CascadeConfig,
    /// Routing profile backing the chosen config (trivial when degenerate).
    pub profile: DepthProfile,
    /// Winning quantile level, if a cascade won over the fallback.
    pub alpha: Option<f64>,
    /// Scalarized objective of the winner.
    pub objective: f64,
    /// Best cascade objective per alpha, in grid order.
    pub per_alpha_objective: Vec<(f64, f64)>,
    /// Decision log per alpha (empty unless trace collection is on).
    pub trace: Vec<(f64, Vec<DpTraceRow>)>,
}

/// Profiles prepared once per (ensemble, validation data, K) and reused
/// across solves; profiles depend on neither F nor lambda, so sweeps over
/// those parameters share one preparation.
pub struct Optimizer {
    alpha_profiles: Vec<AlphaProfile>,
    costs: ModelCosts,
}

impl Optimizer {
    pub fn prepare<T: Scalar>(
        ensemble: &BoostedEnsemble<T>,
        val_keys: &Matrix<T>,
        val_nonkeys: &Matrix<T>,
        num_regions: usize,
        segments: usize,
        alpha_grid: &[f64],
    ) -> Result<Self> {
        let costs = ensemble.model_costs()?;
        let key_scores = ensemble.score_matrix(val_keys);
        let nonkey_scores = ensemble.score_matrix(val_nonkeys);
        let mut alpha_profiles = Vec::with_capacity(alpha_grid.len());
        for &alpha in alpha_grid {
            let theta = candidate_thresholds(&nonkey_scores, alpha)?;
            let profile =
                DepthProfile::measure(&key_scores, &nonkey_scores, &theta, num_regions, segments)?;
            alpha_profiles.push(AlphaProfile { alpha, profile });
        }
        Ok(Optimizer {
            alpha_profiles,
            costs,
        })
    }

    pub fn profiles(&self) -> &[AlphaProfile] {
        &self.alpha_profiles
    }

    pub fn costs(&self) -> &ModelCosts {
        &self.costs
    }

    /// Run the dynamic program per prepared alpha, compare against the
    /// no-model fallback, and return the global minimizer.
    ///
    /// The fallback scores exactly `lambda` (its memory is the scaling
    /// constant itself; it runs no model). Ties prefer the fallback, then
    /// earlier grid entries.
    pub fn solve(&self, params: &OptimizerParams, collect_trace: bool) -> Result<Optimized> {
        params.validate()?;
        let mut best: Option<(f64, usize, DpOutcome)> = None;
        let mut per_alpha = Vec::with_capacity(self.alpha_profiles.len());
        let mut trace = Vec::new();
        for (i, ap) in self.alpha_profiles.iter().enumerate() {
            let outcome = run_dp(&ap.profile, params, &self.costs, true, collect_trace)?;
            per_alpha.push((ap.alpha, outcome.objective));
            if collect_trace {
                trace.push((ap.alpha, outcome.trace.clone()));
            }
            let better = match &best {
                None => true,
                Some((v, _, _)) => outcome.objective < *v,
            };
            if better {
                best = Some((outcome.objective, i, outcome));
            }
        }
        let (dp_value, idx, outcome) = best.expect("alpha grid is non-empty");

        let fallback_value = params.lambda;
        if fallback_value <= dp_value {
            let n_keys = self.alpha_profiles[idx].profile.n_keys();
            let n_nonkeys = self.alpha_profiles[idx].profile.n_nonkeys();
            return Ok(Optimized {
                config: CascadeConfig::degenerate(params.f_target, params.lambda)?,
                profile: DepthProfile::trivial(n_keys, n_nonkeys),
                alpha: None,
                objective: fallback_value,
                per_alpha_objective: per_alpha,
                trace,
            });
        }
        Ok(Optimized {
            config: outcome.config,
            profile: self.alpha_profiles[idx].profile.clone(),
            alpha: Some(self.alpha_profiles[idx].alpha),
            objective: dp_value,
            per_alpha_objective: per_alpha,
            trace,
        })
    }
}

/// Prepare and solve in one call.
pub fn optimize<T: Scalar>(
    ensemble: &BoostedEnsemble<T>,
    val_keys: &Matrix<T>,
    val_nonkeys: &Matrix<T>,
    params: &OptimizerParams,
) -> Result<Optimized> {
    params.validate()?;
    let optimizer = Optimizer::prepare(
        ensemble,
        val_keys,
        val_nonkeys,
        params.num_regions,
        params.segments,
        &params.alpha_grid,
    )?;
    optimizer.solve(params, false)
}
