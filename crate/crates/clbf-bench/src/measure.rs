//! Single-threaded query measurement: false positive rate, per-query model
//! evaluation counts, and wall-clock latency loops.

use std::time::Instant;

use clbf::dataset::Matrix;

use crate::stored::AnyStructure;
use crate::{CliError, CliResult};

/// Counting pass over the non-keys: false positives, model evaluations,
/// and the indices of rejected queries (used by the timing loops).
pub struct NonKeyStats {
    pub queries: usize,
    pub false_positives: usize,
    pub fpr: f64,
    pub fpr_stderr: f64,
    pub mean_evals_rejected: f64,
    pub mean_model_ns_rejected: f64,
    pub rejected_idx: Vec<usize>,
}

pub fn scan_nonkeys(
    structure: &AnyStructure,
    nonkeys: &Matrix<f64>,
    ids: &[Vec<u8>],
) -> NonKeyStats {
    let n = nonkeys.rows();
    let mut false_positives = 0usize;
    let mut rejected_idx = Vec::with_capacity(n);
    let mut evals_sum = 0u64;
    let mut model_ns_sum = 0.0f64;
    for i in 0..n {
        let (found, evals) = structure.query_stats(nonkeys.row(i), &ids[i]);
        if found {
            false_positives += 1;
        } else {
            rejected_idx.push(i);
            evals_sum += evals as u64;
            model_ns_sum += structure.model_ns_of_evals(evals);
        }
    }
    let fpr = false_positives as f64 / n.max(1) as f64;
    let rejected = rejected_idx.len().max(1) as f64;
    NonKeyStats {
        queries: n,
        false_positives,
        fpr,
        fpr_stderr: (fpr * (1.0 - fpr) / n.max(1) as f64).sqrt(),
        mean_evals_rejected: evals_sum as f64 / rejected,
        mean_model_ns_rejected: model_ns_sum / rejected,
        rejected_idx,
    }
}

/// Assert every key answers found; error carries the first offender.
pub fn check_no_false_negatives(
    structure: &AnyStructure,
    keys: &Matrix<f64>,
    ids: &[Vec<u8>],
) -> CliResult<()> {
    for i in 0..keys.rows() {
        let (found, _) = structure.query_stats(keys.row(i), &ids[i]);
        if !found {
            return Err(CliError::FalseNegative(format!(
                "stored key at row {i} answered not-found"
            )));
        }
    }
    Ok(())
}

/// Mean wall-clock nanoseconds per query over the given rows: a warm-up of
/// at least `warmup` queries is discarded, then `batches` batches of
/// `queries / batches` run back to back and the median batch mean is
/// reported. Single-threaded.
pub fn time_queries(
    structure: &AnyStructure,
    m: &Matrix<f64>,
    ids: &[Vec<u8>],
    rows: &[usize],
    queries: usize,
    warmup: usize,
    batches: usize,
) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let mut cursor = 0usize;
    let mut step = |count: usize| -> f64 {
        let start = Instant::now();
        let mut found = 0usize;
        for _ in 0..count {
            let i = rows[cursor];
            cursor += 1;
            if cursor == rows.len() {
                cursor = 0;
            }
            found += structure.query_stats(m.row(i), &ids[i]).0 as usize;
        }
        std::hint::black_box(found);
        start.elapsed().as_nanos() as f64 / count.max(1) as f64
    };
    let _ = step(warmup.max(1));
    let per_batch = (queries / batches.max(1)).max(1);
    let mut means: Vec<f64> = (0..batches.max(1)).map(|_| step(per_batch)).collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    means[means.len() / 2]
}
