//! `bench`: measure a serialized filter against a labelled test CSV.

use std::path::{Path, PathBuf};

use clbf::dataset::Matrix;
use clbf::Dataset64;
use serde_json::json;

use crate::measure::{check_no_false_negatives, scan_nonkeys, time_queries};
use crate::report::{append_rows, BenchReport};
use crate::stored::AnyStructure;
use crate::CliResult;

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    /// Serialized filter (any structure tag).
    pub filter: PathBuf,
    /// Labelled test CSV: key rows assert no false negatives, non-key rows
    /// measure the false positive rate and reject latency.
    pub test_csv: PathBuf,
    /// Timing batches (median reported).
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Timed queries per measurement.
    #[arg(long, default_value_t = 100_000)]
    pub queries: usize,
    /// Discarded warm-up queries.
    #[arg(long, default_value_t = 10_000)]
    pub warmup: usize,
    /// Append a report row to this CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "label-column", default_value = "label")]
    pub label_column: String,
    #[arg(long = "key-label", default_value = "key")]
    pub key_label: String,
    /// Dataset name recorded in the report row.
    #[arg(long = "dataset-name")]
    pub dataset_name: Option<String>,
}

pub fn run(args: &BenchArgs) -> CliResult<()> {
    let structure = AnyStructure::load(&args.filter)?;
    let test = Dataset64::from_csv(&args.test_csv, &args.label_column, &args.key_label)?;
    if let Some(expected) = structure.num_features() {
        if test.dim != expected {
            return Err(crate::CliError::Invalid(format!(
                "filter expects {expected} features, test set has {}",
                test.dim
            )));
        }
    }
    let dataset_name = args
        .dataset_name
        .clone()
        .unwrap_or_else(|| args.test_csv.display().to_string());
    let row = evaluate(
        &structure,
        &dataset_name,
        &test.keys,
        test.key_identities(),
        &test.nonkeys,
        test.nonkey_identities(),
        args.queries,
        args.warmup,
        args.repeats,
        0.0,
        0.0,
    )?;
    if let Some(out) = &args.out {
        append_rows(out, std::slice::from_ref(&row))?;
    }
    let summary = json!({
        "structure": row.structure,
        "filter": args.filter.display().to_string(),
        "keys_checked": test.num_keys(),
        "false_negatives": 0,
        "nonkeys": test.num_nonkeys(),
        "fpr": row.fpr,
        "fpr_stderr": row.fpr_stderr,
        "reject_model_ns": row.reject_model_ns,
        "reject_e2e_ns": row.reject_e2e_ns,
        "accept_ns": row.accept_ns,
        "model_bytes": row.model_bytes,
        "filter_bytes": row.filter_bytes,
        "total_bytes": row.total_bytes,
    });
    println!("{summary:#}");
    Ok(())
}

/// Full single-threaded evaluation of one structure against key/non-key
/// populations; fails with the false-negative exit code if any key is
/// rejected.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    structure: &AnyStructure,
    dataset_name: &str,
    keys: &Matrix<f64>,
    key_ids: &[Vec<u8>],
    nonkeys: &Matrix<f64>,
    nonkey_ids: &[Vec<u8>],
    queries: usize,
    warmup: usize,
    repeats: usize,
    build_ms: f64,
    optimize_ms: f64,
) -> CliResult<BenchReport> {
    // report rows are comma-delimited without quoting
    let dataset_name = dataset_name.replace(',', ";");
    check_no_false_negatives(structure, keys, key_ids)?;
    let stats = scan_nonkeys(structure, nonkeys, nonkey_ids);
    let reject_e2e_ns = time_queries(
        structure,
        nonkeys,
        nonkey_ids,
        &stats.rejected_idx,
        queries,
        warmup,
        repeats,
    );
    let all_keys: Vec<usize> = (0..keys.rows()).collect();
    let accept_ns = time_queries(structure, keys, key_ids, &all_keys, queries, warmup, repeats);

    let (f_target, lambda, depth, regions) = structure.shape();
    let model_bytes = structure.model_bytes();
    let total_bytes = structure.total_bytes();
    Ok(BenchReport {
        structure: structure.kind().to_string(),
        dataset: dataset_name,
        f_target,
        lambda,
        rounds: depth.max(1),
        depth,
        regions,
        max_depth: 0,
        model_bytes,
        filter_bytes: total_bytes - model_bytes,
        total_bytes,
        fpr: stats.fpr,
        fpr_stderr: stats.fpr_stderr,
        reject_model_ns: stats.mean_model_ns_rejected,
        reject_e2e_ns,
        accept_ns,
        build_ms,
        optimize_ms,
    })
}

/// Variant used by the sweep commands where the builder context is known.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_with_context(
    structure: &AnyStructure,
    dataset_name: &str,
    rounds: usize,
    max_depth: usize,
    lambda: f64,
    keys: &Matrix<f64>,
    key_ids: &[Vec<u8>],
    nonkeys: &Matrix<f64>,
    nonkey_ids: &[Vec<u8>],
    queries: usize,
    warmup: usize,
    repeats: usize,
    build_ms: f64,
    optimize_ms: f64,
) -> CliResult<BenchReport> {
    let mut row = evaluate(
        structure,
        dataset_name,
        keys,
        key_ids,
        nonkeys,
        nonkey_ids,
        queries,
        warmup,
        repeats,
        build_ms,
        optimize_ms,
    )?;
    row.rounds = rounds;
    row.max_depth = max_depth;
    row.lambda = lambda;
    Ok(row)
}

/// Path helper shared by the sweeps: `<prefix>.csv` / `<prefix>.svg`.
pub fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut name = prefix.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(ext);
    prefix.with_file_name(name)
}
