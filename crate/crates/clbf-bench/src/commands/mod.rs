//! Subcommand implementations.

pub mod bench;
pub mod build;
pub mod explain;
pub mod sweep;

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use clbf::bloom::theoretical_size_bits;
use clbf::cascade::Clbf;
use clbf::dataset::{KeySplitPolicy, Matrix, SplitSets};
use clbf::gbdt::{BoostedEnsemble, ModelCosts, TrainParams};
use clbf::optimizer::{
    measure_scaling_constants, standard_alpha_grid, Optimized, Optimizer, OptimizerParams,
};
use clbf::{Clbf64, Dataset64, Ensemble64};

use crate::dataset_spec::{parse_list, DatasetSpec};
use crate::{CliError, CliResult};

/// Training/search knobs shared by `build` and the sweep commands.
#[derive(Debug, Clone, clap::Args)]
pub struct PipelineArgs {
    /// Boosting rounds (trees available to the optimizer).
    #[arg(long, default_value_t = 100)]
    pub rounds: usize,
    /// Tree depth limit.
    #[arg(long = "max-depth", default_value_t = 6)]
    pub max_depth: usize,
    /// Boosting learning rate.
    #[arg(long = "learning-rate", default_value_t = 0.3)]
    pub learning_rate: f64,
    /// Final score regions K.
    #[arg(long = "K", default_value_t = 5)]
    pub regions: usize,
    /// Base of the trunk-rate grid.
    #[arg(long = "p", default_value_t = 0.5)]
    pub survive_base: f64,
    /// Trunk-rate grid steps P.
    #[arg(long = "P", default_value_t = 20)]
    pub grid_size: usize,
    /// Histogram segments for score partitioning.
    #[arg(long, default_value_t = 100)]
    pub segments: usize,
    /// Branch-quantile candidates (comma list); defaults to the standard
    /// ladder 0.5,0.2,0.1,...,0.0001,0.
    #[arg(long = "alpha-grid")]
    pub alpha_grid: Option<String>,
    /// Non-key split fractions train,val,test.
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub split: String,
    /// Run seed (CLBF_SEED env var overrides).
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Assume a fixed per-tree inference time instead of measuring
    /// (reproducible builds).
    #[arg(long = "tree-time-ns")]
    pub tree_time_ns: Option<f64>,
    /// Assume a fixed classical-filter reject latency instead of measuring
    /// (reproducible builds).
    #[arg(long = "rbf-ns")]
    pub rbf_ns: Option<f64>,
    /// Label column name for CSV datasets.
    #[arg(long = "label-column", default_value = "label")]
    pub label_column: String,
    /// Label value marking key rows in CSV datasets.
    #[arg(long = "key-label", default_value = "key")]
    pub key_label: String,
}

impl PipelineArgs {
    pub fn alpha_grid(&self) -> CliResult<Vec<f64>> {
        match &self.alpha_grid {
            None => Ok(standard_alpha_grid()),
            Some(s) => parse_list(s, "alpha"),
        }
    }

    pub fn split_fracs(&self) -> CliResult<(f64, f64, f64)> {
        let v: Vec<f64> = parse_list(&self.split, "split fraction")?;
        if v.len() != 3 {
            return Err(CliError::Parse(format!(
                "--split needs three fractions, got {:?}",
                self.split
            )));
        }
        Ok((v[0], v[1], v[2]))
    }
}

/// Everything a sweep point needs: data, splits, calibrated model,
/// prepared optimizer, and scaling constants.
pub struct TrainedWorld {
    pub spec: DatasetSpec,
    pub data: Dataset64,
    pub split: SplitSets<f64>,
    pub test_nonkey_ids: Vec<Vec<u8>>,
    pub ensemble: Ensemble64,
    pub costs: ModelCosts,
    pub optimizer: Optimizer,
    pub time_scale_ns: f64,
    pub seed: u64,
    pub train_ms: f64,
    pub prepare_ms: f64,
}

impl TrainedWorld {
    /// Memory scale (classical filter bits) for a given budget.
    pub fn mem_scale_bits(&self, f_target: f64) -> CliResult<f64> {
        Ok(theoretical_size_bits(self.data.num_keys() as u64, f_target)? as f64)
    }

    pub fn optimizer_params(&self, args: &PipelineArgs, f_target: f64, lambda: f64) -> CliResult<OptimizerParams> {
        Ok(OptimizerParams {
            survive_base: args.survive_base,
            grid_size: args.grid_size,
            num_regions: args.regions,
            segments: args.segments,
            alpha_grid: args.alpha_grid()?,
            ..OptimizerParams::new(
                f_target,
                lambda,
                self.mem_scale_bits(f_target)?,
                self.time_scale_ns,
            )
        })
    }

    /// Solve for one (F, lambda) and build the cascade; the serialized
    /// model is truncated to the chosen depth.
    pub fn solve_and_build(
        &self,
        args: &PipelineArgs,
        f_target: f64,
        lambda: f64,
        collect_trace: bool,
    ) -> CliResult<(Optimized, Clbf64, f64, f64)> {
        let params = self.optimizer_params(args, f_target, lambda)?;
        let t0 = Instant::now();
        let out = self.optimizer.solve(&params, collect_trace)?;
        let optimize_ms = t0.elapsed().as_secs_f64() * 1e3;
        let t1 = Instant::now();
        let depth = out.config.depth();
        let ensemble = if depth == 0 {
            self.ensemble.clone()
        } else {
            self.ensemble.prefix_clone(depth)?
        };
        let clbf = Clbf::build(
            out.config.clone(),
            ensemble,
            out.profile.clone(),
            &self.data.keys,
            self.data.key_identities(),
            self.seed,
        )?;
        let build_ms = t1.elapsed().as_secs_f64() * 1e3;
        Ok((out, clbf, optimize_ms, build_ms))
    }
}

/// Load data, split, train, calibrate, measure scales, prepare profiles.
pub fn prepare_world(spec: &DatasetSpec, args: &PipelineArgs, seed: u64) -> CliResult<TrainedWorld> {
    let data = spec.load(seed, &args.label_column, &args.key_label)?;
    let (tr, va, te) = args.split_fracs()?;
    let split = data.split(tr, va, te, seed, KeySplitPolicy::TrainAndValidation)?;
    if split.val.nonkeys.rows() == 0 {
        return Err(CliError::Invalid(
            "validation split is empty; increase the validation fraction".into(),
        ));
    }

    let t0 = Instant::now();
    let params = TrainParams {
        rounds: args.rounds,
        max_depth: args.max_depth,
        learning_rate: args.learning_rate,
        seed,
        ..Default::default()
    };
    let mut ensemble = BoostedEnsemble::train(&split.train.keys, &split.train.nonkeys, &params)?;
    match args.tree_time_ns {
        Some(ns) => ensemble.set_per_tree_time_ns(vec![ns; args.rounds])?,
        None => {
            let rows: Vec<usize> = (0..split.val.nonkeys.rows().min(1000)).collect();
            let cal = split.val.nonkeys.select(&rows);
            let repeats = 100_000usize.div_ceil(cal.rows().max(1)).max(1);
            ensemble.calibrate_times(&cal, repeats)?;
        }
    }
    let train_ms = t0.elapsed().as_secs_f64() * 1e3;

    let time_scale_ns = match args.rbf_ns {
        Some(ns) => ns,
        None => {
            let val_ids: Vec<Vec<u8>> = split
                .val
                .nonkeys
                .iter_rows()
                .map(clbf::dataset::canonical_identity)
                .collect();
            measure_scaling_constants(data.key_identities(), &val_ids, 0.01, seed, 100_000)?.1
        }
    };

    let t1 = Instant::now();
    let costs_source = ensemble.model_costs()?;
    let optimizer = Optimizer::prepare(
        &ensemble,
        &data.keys,
        &split.val.nonkeys,
        args.regions,
        args.segments,
        &args.alpha_grid()?,
    )?;
    let prepare_ms = t1.elapsed().as_secs_f64() * 1e3;

    Ok(TrainedWorld {
        spec: spec.clone(),
        test_nonkey_ids: split
            .test
            .nonkeys
            .iter_rows()
            .map(clbf::dataset::canonical_identity)
            .collect(),
        data,
        split,
        ensemble,
        costs: costs_source,
        optimizer,
        time_scale_ns,
        seed,
        train_ms,
        prepare_ms,
    })
}

/// Write an evaluation CSV: every stored key plus the held-out test
/// non-keys (the false-positive population).
pub fn write_eval_csv(path: &Path, keys: &Matrix<f64>, nonkeys: &Matrix<f64>) -> CliResult<()> {
    let dim = keys.cols();
    let mut out = String::new();
    for i in 0..dim {
        write!(out, "f{i},").unwrap();
    }
    out.push_str("label\n");
    for row in keys.iter_rows() {
        for v in row {
            write!(out, "{:.8e},", v).unwrap();
        }
        out.push_str("key\n");
    }
    for row in nonkeys.iter_rows() {
        for v in row {
            write!(out, "{:.8e},", v).unwrap();
        }
        out.push_str("nonkey\n");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Trace sidecar path convention: `<filter>.trace.jsonl`.
pub fn trace_path_for(out: &Path) -> std::path::PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".trace.jsonl");
    out.with_file_name(name)
}

/// Serialize the optimizer trace as JSON lines: a header record, one
/// record per (alpha, depth, exponent) decision, and a footer naming the
/// chosen plan.
pub fn write_trace(
    path: &Path,
    params: &OptimizerParams,
    out: &Optimized,
) -> CliResult<()> {
    use serde_json::json;
    let mut text = String::new();
    let header = json!({
        "type": "header",
        "f_target": params.f_target,
        "lambda": params.lambda,
        "mem_scale_bits": params.mem_scale_bits,
        "time_scale_ns": params.time_scale_ns,
        "survive_base": params.survive_base,
        "grid_size": params.grid_size,
        "num_regions": params.num_regions,
        "alpha_grid": params.alpha_grid,
    });
    text.push_str(&header.to_string());
    text.push('\n');
    for (alpha, objective) in &out.per_alpha_objective {
        let line = json!({"type": "alpha", "alpha": alpha, "objective": objective});
        text.push_str(&line.to_string());
        text.push('\n');
    }
    for (alpha, rows) in &out.trace {
        for r in rows {
            let line = json!({
                "type": "state",
                "alpha": alpha,
                "depth": r.depth,
                "exponent": r.exponent,
                "terminal": r.terminal,
                "rate_exponent": r.rate_exponent,
                "value": r.value,
                "terminal_value": r.terminal_value,
                "branch_value": r.branch_value,
            });
            text.push_str(&line.to_string());
            text.push('\n');
        }
    }
    let footer = json!({
        "type": "chosen",
        "alpha": out.alpha,
        "objective": out.objective,
        "depth": out.config.depth(),
    });
    text.push_str(&footer.to_string());
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
