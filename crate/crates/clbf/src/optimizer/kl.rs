//! Score-range partitioning by KL-divergence maximization.
//!
//! Key and non-key scores are histogrammed into equal-width segments over
//! [0, 1]; a dynamic program then picks K-1 cut points maximizing
//! `sum_k g_k * log2(g_k / h_k)` over the induced regions, where `g_k` and
//! `h_k` are the key/non-key masses of region k. One pseudo-count per
//! segment is added to both histograms before mass computation so empty
//! regions never divide by zero. Larger divergence means the regions
//! separate keys from non-keys better, which directly shrinks the final
//! filters that terminal layers can get away with.

use crate::error::{Error, Result};

/// Partition `[0, 1]` into `k_regions` intervals on segment boundaries.
///
/// Returns `k_regions + 1` strictly ascending boundaries starting at 0 and
/// ending at 1. Ties between cut sets break toward the earliest cuts.
pub fn kl_partition(
    key_scores: &[f64],
    nonkey_scores: &[f64],
    k_regions: usize,
    segments: usize,
) -> Result<Vec<f64>> {
    if k_regions < 1 {
        return Err(Error::invalid("partition needs at least one region"));
    }
    if segments < k_regions {
        return Err(Error::invalid(format!(
            "{k_regions} regions do not fit in {segments} segments"
        )));
    }
    if k_regions == 1 {
        return Ok(vec![0.0, 1.0]);
    }

    let key_hist = histogram(key_scores, segments);
    let nonkey_hist = histogram(nonkey_scores, segments);
    let cuts = best_cuts(&key_hist, &nonkey_hist, k_regions, segments);

    let mut boundaries = Vec::with_capacity(k_regions + 1);
    boundaries.push(0.0);
    for c in cuts {
        boundaries.push(c as f64 / segments as f64);
    }
    boundaries.push(1.0);
    Ok(boundaries)
}

fn histogram(scores: &[f64], segments: usize) -> Vec<u64> {
    let mut hist = vec![0u64; segments];
    for &s in scores {
        let bin = ((s * segments as f64) as usize).min(segments - 1);
        hist[bin] += 1;
    }
    hist
}

/// Region weight `g * log2(g / h)` with one pseudo-count per bin.
fn region_weight(
    key_prefix: &[u64],
    nonkey_prefix: &[u64],
    from: usize,
    to: usize,
    key_total: f64,
    nonkey_total: f64,
) -> f64 {
    let bins = (to - from) as f64;
    let g = (key_prefix[to] - key_prefix[from]) as f64 + bins;
    let h = (nonkey_prefix[to] - nonkey_prefix[from]) as f64 + bins;
    let g = g / key_total;
    let h = h / nonkey_total;
    g * (g / h).log2()
}

fn best_cuts(key_hist: &[u64], nonkey_hist: &[u64], k_regions: usize, segments: usize) -> Vec<usize> {
    let prefix = |hist: &[u64]| -> Vec<u64> {
        let mut p = vec![0u64; hist.len() + 1];
        for (i, &v) in hist.iter().enumerate() {
            p[i + 1] = p[i] + v;
        }
        p
    };
    let kp = prefix(key_hist);
    let np = prefix(nonkey_hist);
    let key_total = kp[segments] as f64 + segments as f64;
    let nonkey_total = np[segments] as f64 + segments as f64;
    let w = |from: usize, to: usize| region_weight(&kp, &np, from, to, key_total, nonkey_total);

    // value[j][r]: best divergence over the first j segments in r regions;
    // regions must be non-empty, so j >= r.
    let mut value = vec![vec![f64::NEG_INFINITY; k_regions + 1]; segments + 1];
    let mut from = vec![vec![0usize; k_regions + 1]; segments + 1];
    for j in 1..=segments {
        value[j][1] = w(0, j);
    }
    for r in 2..=k_regions {
        for j in r..=segments {
            let mut best = f64::NEG_INFINITY;
            let mut best_i = 0;
            for i in r - 1..j {
                let cand = value[i][r - 1] + w(i, j);
                // strict improvement keeps the earliest predecessor on ties
                if cand > best {
                    best = cand;
                    best_i = i;
                }
            }
            value[j][r] = best;
            from[j][r] = best_i;
        }
    }

    let mut cuts = Vec::with_capacity(k_regions - 1);
    let mut j = segments;
    for r in (2..=k_regions).rev() {
        let i = from[j][r];
        cuts.push(i);
        j = i;
    }
    cuts.reverse();
    cuts
}

/// Total divergence of a given boundary set; used by tests as an oracle.
pub fn partition_divergence(
    key_scores: &[f64],
    nonkey_scores: &[f64],
    boundaries: &[f64],
    segments: usize,
) -> f64 {
    let kp_hist = histogram(key_scores, segments);
    let np_hist = histogram(nonkey_scores, segments);
    let mut kp = vec![0u64; segments + 1];
    let mut np = vec![0u64; segments + 1];
    for i in 0..segments {
        kp[i + 1] = kp[i] + kp_hist[i];
        np[i + 1] = np[i] + np_hist[i];
    }
    let key_total = kp[segments] as f64 + segments as f64;
    let nonkey_total = np[segments] as f64 + segments as f64;
    let mut total = 0.0;
    for win in boundaries.windows(2) {
        let from = (win[0] * segments as f64).round() as usize;
        let to = (win[1] * segments as f64).round() as usize;
        total += region_weight(&kp, &np, from, to, key_total, nonkey_total);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    /// Exhaustive oracle over all cut combinations.
    fn brute_force(
        key_scores: &[f64],
        nonkey_scores: &[f64],
        k_regions: usize,
        segments: usize,
    ) -> (f64, Vec<f64>) {
        fn rec(
            cuts: &mut Vec<usize>,
            next: usize,
            remaining: usize,
            segments: usize,
            best: &mut (f64, Vec<usize>),
            eval: &dyn Fn(&[usize]) -> f64,
        ) {
            if remaining == 0 {
                let v = eval(cuts);
                if v > best.0 {
                    *best = (v, cuts.clone());
                }
                return;
            }
            for c in next..=(segments - remaining) {
                cuts.push(c);
                rec(cuts, c + 1, remaining - 1, segments, best, eval);
                cuts.pop();
            }
        }
        let eval = |cuts: &[usize]| -> f64 {
            let mut b = vec![0.0];
            b.extend(cuts.iter().map(|&c| c as f64 / segments as f64));
            b.push(1.0);
            partition_divergence(key_scores, nonkey_scores, &b, segments)
        };
        let mut best = (f64::NEG_INFINITY, vec![]);
        rec(&mut Vec::new(), 1, k_regions - 1, segments, &mut best, &eval);
        let mut b = vec![0.0];
        b.extend(best.1.iter().map(|&c| c as f64 / segments as f64));
        b.push(1.0);
        (best.0, b)
    }

    #[test]
    fn single_region_is_trivial() {
        let b = kl_partition(&[0.3, 0.9], &[0.1], 1, 100).unwrap();
        assert_eq!(b, vec![0.0, 1.0]);
    }

    #[test]
    fn separated_uniforms_cut_at_half() {
        let mut rng = SplitMix64::new(3);
        let keys: Vec<f64> = (0..2000).map(|_| 0.5 + 0.5 * rng.next_f64()).collect();
        let nonkeys: Vec<f64> = (0..2000).map(|_| 0.5 * rng.next_f64()).collect();
        let b = kl_partition(&keys, &nonkeys, 2, 10).unwrap();
        assert_eq!(b, vec![0.0, 0.5, 1.0]);
        // brute force agrees
        let (_, oracle) = brute_force(&keys, &nonkeys, 2, 10);
        assert_eq!(b, oracle);
    }

    #[test]
    fn identical_histograms_tie_break_earliest() {
        let scores: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let b = kl_partition(&scores, &scores, 3, 10).unwrap();
        assert_eq!(b, vec![0.0, 0.1, 0.2, 1.0]);
    }

    #[test]
    fn rejects_more_regions_than_segments() {
        assert!(kl_partition(&[0.5], &[0.5], 11, 10).is_err());
        assert!(kl_partition(&[0.5], &[0.5], 0, 10).is_err());
    }

    #[test]
    fn empty_inputs_still_partition() {
        let b = kl_partition(&[], &[], 3, 12).unwrap();
        assert_eq!(b.len(), 4);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            keys in proptest::collection::vec(0.0f64..1.0, 0..60),
            nonkeys in proptest::collection::vec(0.0f64..1.0, 0..60),
            k in 1usize..4,
            segments in 4usize..13,
        ) {
            let b = kl_partition(&keys, &nonkeys, k, segments).unwrap();
            let mine = partition_divergence(&keys, &nonkeys, &b, segments);
            let (oracle, _) = brute_force(&keys, &nonkeys, k, segments);
            prop_assert!((mine - oracle).abs() < 1e-9, "{mine} vs {oracle}");
            prop_assert_eq!(b.len(), k + 1);
            prop_assert!(b.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(b[0], 0.0);
            prop_assert_eq!(b[k], 1.0);
        }
    }
}
