//! `build`: train, optimize, construct, and serialize a filter structure.

use std::path::PathBuf;

use clbf::baselines::{build_classic, classic_to_bytes, Plbf, Sandwiched};
use clbf::cascade::{analytic_fpr, analytic_memory_bits, analytic_reject_time_ns};
use serde_json::json;

use super::{prepare_world, trace_path_for, write_eval_csv, write_trace, PipelineArgs};
use crate::dataset_spec::DatasetSpec;
use crate::{effective_seed, CliError, CliResult};

#[derive(Debug, clap::Args)]
pub struct BuildArgs {
    /// CSV path or generator spec (random:…, sep:…, clusters:…).
    pub dataset: String,
    /// Target false positive rate F.
    #[arg(long = "F", default_value_t = 0.01)]
    pub f_target: f64,
    /// Memory/reject-time trade-off weight.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Output filter file.
    #[arg(long)]
    pub out: PathBuf,
    /// Structure to build.
    #[arg(long, default_value = "clbf", value_parser = ["clbf", "classic", "plbf", "sandwiched"])]
    pub structure: String,
    /// Model depth for plbf/sandwiched builds (defaults to --rounds).
    #[arg(long = "model-depth")]
    pub model_depth: Option<usize>,
    /// Also write the evaluation CSV (all keys + test non-keys) here.
    #[arg(long = "emit-test")]
    pub emit_test: Option<PathBuf>,
    /// Optimizer trace destination (default: <out>.trace.jsonl).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Skip the optimizer trace.
    #[arg(long = "no-trace")]
    pub no_trace: bool,
}

pub fn run(args: &BuildArgs) -> CliResult<()> {
    let seed = effective_seed(args.pipeline.seed);
    let spec = DatasetSpec::parse(&args.dataset)?;
    if !(args.f_target > 0.0 && args.f_target < 1.0) {
        return Err(CliError::Invalid(format!(
            "target fpr must be in (0, 1), got {}",
            args.f_target
        )));
    }

    if args.structure == "classic" {
        // no model: load, split (for the eval csv), build, serialize
        let data = spec.load(seed, &args.pipeline.label_column, &args.pipeline.key_label)?;
        let (tr, va, te) = args.pipeline.split_fracs()?;
        let split = data.split(tr, va, te, seed, clbf::dataset::KeySplitPolicy::TrainAndValidation)?;
        let filter = build_classic(data.key_identities(), args.f_target, seed)?;
        std::fs::write(&args.out, classic_to_bytes(&filter))?;
        if let Some(path) = &args.emit_test {
            write_eval_csv(path, &data.keys, &split.test.nonkeys)?;
        }
        let summary = json!({
            "structure": "classic",
            "dataset": spec.describe(),
            "keys": data.num_keys(),
            "f_target": args.f_target,
            "size_bits": filter.size_bits(),
            "out": args.out.display().to_string(),
        });
        println!("{summary:#}");
        return Ok(());
    }

    let world = prepare_world(&spec, &args.pipeline, seed)?;

    match args.structure.as_str() {
        "clbf" => {
            let (out, clbf, optimize_ms, build_ms) =
                world.solve_and_build(&args.pipeline, args.f_target, args.lambda, !args.no_trace)?;
            std::fs::write(&args.out, clbf.to_bytes())?;
            if !args.no_trace {
                let params = world.optimizer_params(&args.pipeline, args.f_target, args.lambda)?;
                let trace_path = args.trace.clone().unwrap_or_else(|| trace_path_for(&args.out));
                write_trace(&trace_path, &params, &out)?;
            }
            if let Some(path) = &args.emit_test {
                write_eval_csv(path, &world.data.keys, &world.split.test.nonkeys)?;
            }
            let (analytic_mem_bits, analytic_reject) = if out.config.is_degenerate() {
                (world.mem_scale_bits(args.f_target)?, 0.0)
            } else {
                (
                    analytic_memory_bits(&out.config, &world.costs, &out.profile),
                    analytic_reject_time_ns(&out.config, &world.costs, &out.profile),
                )
            };
            let summary = json!({
                "structure": "clbf",
                "dataset": spec.describe(),
                "keys": world.data.num_keys(),
                "f_target": args.f_target,
                "lambda": args.lambda,
                "rounds": args.pipeline.rounds,
                "depth": out.config.depth(),
                "degenerate": out.config.is_degenerate(),
                "alpha": out.alpha,
                "objective": out.objective,
                "analytic": {
                    "fpr": analytic_fpr(&out.config, &out.profile),
                    "memory_bytes": analytic_mem_bits / 8.0,
                    "reject_model_ns": analytic_reject,
                },
                "built": {
                    "model_bytes": clbf.model_bytes(),
                    "total_bytes": clbf.total_bytes(),
                },
                "scales": {
                    "mem_scale_bits": world.mem_scale_bits(args.f_target)?,
                    "time_scale_ns": world.time_scale_ns,
                },
                "timings_ms": {
                    "train": world.train_ms,
                    "prepare": world.prepare_ms,
                    "optimize": optimize_ms,
                    "build": build_ms,
                },
                "seed": seed,
                "out": args.out.display().to_string(),
            });
            println!("{summary:#}");
        }
        "plbf" => {
            let depth = args.model_depth.unwrap_or(args.pipeline.rounds);
            let plbf = Plbf::build(
                &world.ensemble,
                depth,
                &world.data.keys,
                world.data.key_identities(),
                &world.data.keys,
                &world.split.val.nonkeys,
                args.f_target,
                args.pipeline.regions,
                args.pipeline.segments,
                seed,
            )?;
            std::fs::write(&args.out, plbf.to_bytes())?;
            if let Some(path) = &args.emit_test {
                write_eval_csv(path, &world.data.keys, &world.split.test.nonkeys)?;
            }
            let summary = json!({
                "structure": "plbf",
                "dataset": spec.describe(),
                "depth": depth,
                "f_target": args.f_target,
                "analytic_fpr": plbf.analytic_fpr(),
                "total_bytes": plbf.total_bytes(),
                "out": args.out.display().to_string(),
            });
            println!("{summary:#}");
        }
        "sandwiched" => {
            let depth = args.model_depth.unwrap_or(args.pipeline.rounds);
            let s = Sandwiched::build(
                &world.ensemble,
                depth,
                &world.data.keys,
                world.data.key_identities(),
                &world.data.keys,
                &world.split.val.nonkeys,
                args.f_target,
                args.pipeline.survive_base,
                args.pipeline.grid_size,
                &args.pipeline.alpha_grid()?,
                seed,
            )?;
            std::fs::write(&args.out, s.to_bytes())?;
            if let Some(path) = &args.emit_test {
                write_eval_csv(path, &world.data.keys, &world.split.test.nonkeys)?;
            }
            let summary = json!({
                "structure": "sandwiched",
                "dataset": spec.describe(),
                "depth": depth,
                "f_target": args.f_target,
                "threshold": s.threshold(),
                "pre_fpr": s.pre_fpr(),
                "backup_fpr": s.backup_fpr(),
                "analytic_fpr": s.analytic_fpr(),
                "total_bytes": s.total_bytes(),
                "out": args.out.display().to_string(),
            });
            println!("{summary:#}");
        }
        other => {
            return Err(CliError::Invalid(format!("unknown structure {other:?}")));
        }
    }
    Ok(())
}
