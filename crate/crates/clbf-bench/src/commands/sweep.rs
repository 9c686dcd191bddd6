//! `sweep-f` and `sweep-lambda`: trade-off curves over the target rate and
//! the scalarization weight, emitted as CSV plus an SVG chart.
//!
//! One dataset load, one training run, and one optimizer preparation are
//! shared across every point of a sweep, so points differ only in the
//! parameter under study.

use std::path::PathBuf;

use clbf::baselines::{build_classic, Plbf, Sandwiched};
use clbf::cascade::{analytic_memory_bits, analytic_reject_time_ns};
use serde_json::json;

use super::bench::{evaluate_with_context, with_extension};
use super::{prepare_world, PipelineArgs, TrainedWorld};
use crate::dataset_spec::{parse_list, DatasetSpec};
use crate::report::{append_rows, BenchReport};
use crate::stored::AnyStructure;
use crate::svg::{plot, Series};
use crate::{effective_seed, CliError, CliResult};

#[derive(Debug, clap::Args)]
pub struct SweepFArgs {
    /// CSV path or generator spec.
    pub dataset: String,
    /// Target rates to sweep.
    #[arg(long = "F-list", default_value = "0.1,0.0316,0.01,0.00316,0.001")]
    pub f_list: String,
    /// Scalarization weight used for every cascade point.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Baselines to include.
    #[arg(long, default_value = "classic,plbf,sandwiched")]
    pub baselines: String,
    /// Model depths for the partitioned-LBF baseline.
    #[arg(long = "plbf-depths", default_value = "1,10,100")]
    pub plbf_depths: String,
    /// Model depth for the sandwiched baseline.
    #[arg(long = "sandwich-depth", default_value_t = 10)]
    pub sandwich_depth: usize,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Output prefix; writes <prefix>.csv and <prefix>.svg.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub queries: usize,
    #[arg(long, default_value_t = 10_000)]
    pub warmup: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
}

pub fn run_sweep_f(args: &SweepFArgs) -> CliResult<()> {
    let seed = effective_seed(args.pipeline.seed);
    let spec = DatasetSpec::parse(&args.dataset)?;
    let f_list: Vec<f64> = parse_list(&args.f_list, "F")?;
    if f_list.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
        return Err(CliError::Invalid("every F must be in (0, 1)".into()));
    }
    let baselines: Vec<&str> = args.baselines.split(',').filter(|s| !s.is_empty()).collect();
    let plbf_depths: Vec<usize> = parse_list(&args.plbf_depths, "plbf depth")?;
    let world = prepare_world(&spec, &args.pipeline, seed)?;
    let name = spec.describe();

    let mut rows: Vec<BenchReport> = Vec::new();
    for &f_target in &f_list {
        let (out, clbf, optimize_ms, build_ms) =
            world.solve_and_build(&args.pipeline, f_target, args.lambda, false)?;
        let structure = AnyStructure::Cascade(clbf);
        let mut row = measure_point(args, &world, &structure, &name, args.lambda, build_ms, optimize_ms)?;
        row.depth = out.config.depth();
        rows.push(row);

        if baselines.contains(&"classic") {
            let filter = build_classic(world.data.key_identities(), f_target, seed)?;
            let structure = AnyStructure::Classic(filter);
            rows.push(measure_point(args, &world, &structure, &name, 1.0, 0.0, 0.0)?);
        }
        if baselines.contains(&"plbf") {
            for &depth in &plbf_depths {
                if depth > args.pipeline.rounds {
                    continue;
                }
                let plbf = Plbf::build(
                    &world.ensemble,
                    depth,
                    &world.data.keys,
                    world.data.key_identities(),
                    &world.data.keys,
                    &world.split.val.nonkeys,
                    f_target,
                    args.pipeline.regions,
                    args.pipeline.segments,
                    seed,
                )?;
                let structure = AnyStructure::Partitioned(plbf);
                let mut row = measure_point(args, &world, &structure, &name, 1.0, 0.0, 0.0)?;
                row.structure = format!("plbf-d{depth}");
                rows.push(row);
            }
        }
        if baselines.contains(&"sandwiched") {
            let depth = args.sandwich_depth.min(args.pipeline.rounds);
            let s = Sandwiched::build(
                &world.ensemble,
                depth,
                &world.data.keys,
                world.data.key_identities(),
                &world.data.keys,
                &world.split.val.nonkeys,
                f_target,
                args.pipeline.survive_base,
                args.pipeline.grid_size,
                &args.pipeline.alpha_grid()?,
                seed,
            )?;
            let structure = AnyStructure::Sandwich(s);
            rows.push(measure_point(args, &world, &structure, &name, 1.0, 0.0, 0.0)?);
        }
    }

    let csv_path = with_extension(&args.out, "csv");
    let svg_path = with_extension(&args.out, "svg");
    append_rows(&csv_path, &rows)?;

    // memory-vs-target-rate chart, log-x
    let mut by_structure: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for row in &rows {
        let point = (row.f_target, row.total_bytes as f64 / 1024.0);
        match by_structure.iter_mut().find(|(s, _)| *s == row.structure) {
            Some((_, pts)) => pts.push(point),
            None => by_structure.push((row.structure.clone(), vec![point])),
        }
    }
    let series: Vec<Series> = by_structure
        .into_iter()
        .map(|(label, points)| Series { label, points })
        .collect();
    std::fs::write(
        &svg_path,
        plot(
            &format!("memory vs target rate — {name}"),
            "target false positive rate",
            "total memory (KiB)",
            true,
            false,
            &series,
        ),
    )?;

    let summary = json!({
        "sweep": "F",
        "dataset": name,
        "points": rows.len(),
        "csv": csv_path.display().to_string(),
        "svg": svg_path.display().to_string(),
    });
    println!("{summary:#}");
    Ok(())
}

#[derive(Debug, clap::Args)]
pub struct SweepLambdaArgs {
    /// CSV path or generator spec.
    pub dataset: String,
    /// Scalarization weights to sweep.
    #[arg(
        long = "lambda-list",
        default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0"
    )]
    pub lambda_list: String,
    /// Target rate for every point.
    #[arg(long = "F", default_value_t = 0.001)]
    pub f_target: f64,
    /// Model depths for the baseline curves.
    #[arg(long = "baseline-depths", default_value = "1,10,100")]
    pub baseline_depths: String,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Output prefix; writes <prefix>.csv and <prefix>.svg.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub queries: usize,
    #[arg(long, default_value_t = 10_000)]
    pub warmup: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
}

pub fn run_sweep_lambda(args: &SweepLambdaArgs) -> CliResult<()> {
    let seed = effective_seed(args.pipeline.seed);
    let spec = DatasetSpec::parse(&args.dataset)?;
    let lambda_list: Vec<f64> = parse_list(&args.lambda_list, "lambda")?;
    if lambda_list.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(CliError::Invalid("every lambda must be in [0, 1]".into()));
    }
    let baseline_depths: Vec<usize> = parse_list(&args.baseline_depths, "depth")?;
    let world = prepare_world(&spec, &args.pipeline, seed)?;
    let name = spec.describe();

    let mut rows: Vec<BenchReport> = Vec::new();
    let mut analytic_points: Vec<(f64, f64, f64)> = Vec::new(); // (lambda, mem bits, reject ns)
    for &lambda in &lambda_list {
        let (out, clbf, optimize_ms, build_ms) =
            world.solve_and_build(&args.pipeline, args.f_target, lambda, false)?;
        let (mem_bits, reject_ns) = if out.config.is_degenerate() {
            (world.mem_scale_bits(args.f_target)?, 0.0)
        } else {
            (
                analytic_memory_bits(&out.config, &world.costs, &out.profile),
                analytic_reject_time_ns(&out.config, &world.costs, &out.profile),
            )
        };
        analytic_points.push((lambda, mem_bits, reject_ns));
        let structure = AnyStructure::Cascade(clbf);
        let mut row = measure_lambda_point(args, &world, &structure, &name, lambda, build_ms, optimize_ms)?;
        row.depth = out.config.depth();
        rows.push(row);
    }

    // the scalarization is a weighted sum over one candidate set, so the
    // analytic frontier must be monotone in lambda
    for w in analytic_points.windows(2) {
        assert!(
            w[1].1 <= w[0].1,
            "analytic memory increased from lambda {} to {}",
            w[0].0,
            w[1].0
        );
        assert!(
            w[1].2 >= w[0].2,
            "analytic reject time decreased from lambda {} to {}",
            w[0].0,
            w[1].0
        );
    }

    // baselines: classic point plus plbf/sandwiched curves over depth
    let classic = build_classic(world.data.key_identities(), args.f_target, seed)?;
    rows.push(measure_lambda_point(
        args,
        &world,
        &AnyStructure::Classic(classic),
        &name,
        1.0,
        0.0,
        0.0,
    )?);
    for &depth in &baseline_depths {
        if depth > args.pipeline.rounds {
            continue;
        }
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
        let mut row = measure_lambda_point(
            args,
            &world,
            &AnyStructure::Partitioned(plbf),
            &name,
            1.0,
            0.0,
            0.0,
        )?;
        row.structure = format!("plbf-d{depth}");
        rows.push(row);
        let sandwiched = Sandwiched::build(
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
        );
        // a tight budget can be infeasible for the sandwiched structure at
        // small depths; skip those points
        if let Ok(s) = sandwiched {
            let mut row = measure_lambda_point(
                args,
                &world,
                &AnyStructure::Sandwich(s),
                &name,
                1.0,
                0.0,
                0.0,
            )?;
            row.structure = format!("sandwiched-d{depth}");
            rows.push(row);
        }
    }

    let csv_path = with_extension(&args.out, "csv");
    let svg_path = with_extension(&args.out, "svg");
    append_rows(&csv_path, &rows)?;

    // Pareto chart: memory vs measured reject latency
    let mut by_structure: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for row in &rows {
        let point = (row.total_bytes as f64 / 1024.0, row.reject_e2e_ns);
        let label = if row.structure == "clbf" {
            "clbf (lambda sweep)".to_string()
        } else {
            row.structure.clone()
        };
        match by_structure.iter_mut().find(|(s, _)| *s == label) {
            Some((_, pts)) => pts.push(point),
            None => by_structure.push((label, vec![point])),
        }
    }
    let series: Vec<Series> = by_structure
        .into_iter()
        .map(|(label, points)| Series { label, points })
        .collect();
    std::fs::write(
        &svg_path,
        plot(
            &format!("memory vs reject time — {name} (F={})", args.f_target),
            "total memory (KiB)",
            "reject latency (ns, end-to-end)",
            false,
            true,
            &series,
        ),
    )?;

    let summary = json!({
        "sweep": "lambda",
        "dataset": name,
        "f_target": args.f_target,
        "points": rows.len(),
        "monotone": true,
        "csv": csv_path.display().to_string(),
        "svg": svg_path.display().to_string(),
    });
    println!("{summary:#}");
    Ok(())
}

fn measure_point(
    args: &SweepFArgs,
    world: &TrainedWorld,
    structure: &AnyStructure,
    name: &str,
    lambda: f64,
    build_ms: f64,
    optimize_ms: f64,
) -> CliResult<BenchReport> {
    evaluate_with_context(
        structure,
        name,
        args.pipeline.rounds,
        args.pipeline.max_depth,
        lambda,
        &world.data.keys,
        world.data.key_identities(),
        &world.split.test.nonkeys,
        &world.test_nonkey_ids,
        args.queries,
        args.warmup,
        args.repeats,
        build_ms,
        optimize_ms,
    )
}

fn measure_lambda_point(
    args: &SweepLambdaArgs,
    world: &TrainedWorld,
    structure: &AnyStructure,
    name: &str,
    lambda: f64,
    build_ms: f64,
    optimize_ms: f64,
) -> CliResult<BenchReport> {
    evaluate_with_context(
        structure,
        name,
        args.pipeline.rounds,
        args.pipeline.max_depth,
        lambda,
        &world.data.keys,
        world.data.key_identities(),
        &world.split.test.nonkeys,
        &world.test_nonkey_ids,
        args.queries,
        args.warmup,
        args.repeats,
        build_ms,
        optimize_ms,
    )
}
