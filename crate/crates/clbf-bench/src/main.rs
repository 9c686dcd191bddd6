use std::process::ExitCode;

use clap::{Parser, Subcommand};

use clbf_bench::commands::{bench, build, explain, sweep};

/// Benchmark harness for the cascaded learned Bloom filter and its
/// baselines: build filters, measure false positive rates and query
/// latency, and sweep the memory/reject-time trade-off.
#[derive(Parser)]
#[command(name = "clbf-bench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train, optimize, build, and serialize a filter structure.
    Build(build::BuildArgs),
    /// Measure a serialized filter against a labelled test CSV.
    Bench(bench::BenchArgs),
    /// Sweep the target false positive rate (memory-accuracy trade-off).
    SweepF(sweep::SweepFArgs),
    /// Sweep the scalarization weight (memory-reject-time trade-off).
    SweepLambda(sweep::SweepLambdaArgs),
    /// Print a filter's configuration and optimizer trace summary.
    Explain(explain::ExplainArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Build(args) => build::run(args),
        Command::Bench(args) => bench::run(args),
        Command::SweepF(args) => sweep::run_sweep_f(args),
        Command::SweepLambda(args) => sweep::run_sweep_lambda(args),
        Command::Explain(args) => explain::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
