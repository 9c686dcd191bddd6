//! `explain`: human-readable dump of a serialized filter, plus a summary
//! of the optimizer trace when its sidecar file is present.

use std::path::PathBuf;

use clbf::cascade::{analytic_fpr, analytic_memory_bits, analytic_reject_time_ns};

use super::trace_path_for;
use crate::stored::AnyStructure;
use crate::CliResult;

#[derive(Debug, clap::Args)]
pub struct ExplainArgs {
    /// Serialized filter file.
    pub filter: PathBuf,
}

fn fmt_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", items.join(", "))
}

pub fn run(args: &ExplainArgs) -> CliResult<()> {
    let structure = AnyStructure::load(&args.filter)?;
    match &structure {
        AnyStructure::Cascade(c) => {
            let cfg = c.config();
            println!("structure: cascaded learned Bloom filter");
            println!("keys stored: {}", c.key_count());
            println!("target fpr F: {}", cfg.f_target());
            println!("lambda: {}", cfg.lambda());
            if cfg.is_degenerate() {
                println!("depth D: 0 — classical fallback (single Bloom filter at F)");
                println!("total bytes: {}", c.total_bytes());
                return Ok(());
            }
            let d = cfg.depth();
            println!("depth D: {d}");
            println!("regions K: {}", cfg.num_regions());
            println!(
                "branch thresholds ({} = D-1): {}",
                cfg.branch_thresholds().len(),
                fmt_vec(cfg.branch_thresholds())
            );
            println!("trunk rates: {}", fmt_vec(cfg.trunk_fprs()));
            println!("branch rates: {}", fmt_vec(cfg.branch_fprs()));
            println!("final partition: {}", fmt_vec(cfg.final_partition()));
            println!("final rates: {}", fmt_vec(cfg.final_fprs()));
            let profile = c.profile();
            println!("routing (fractions of keys / non-keys, trunk filtering off):");
            for i in 0..d {
                let branch = if i + 1 < d {
                    format!(
                        "  branch {:.6}/{:.6}",
                        profile.branch_key_frac(i),
                        profile.branch_nonkey_frac(i)
                    )
                } else {
                    String::new()
                };
                println!(
                    "  depth {:>3}: trunk {:.6}/{:.6}{branch}",
                    i + 1,
                    profile.trunk_key_frac(i),
                    profile.trunk_nonkey_frac(i)
                );
            }
            println!("final-layer masses at depth {d}:");
            for k in 0..cfg.num_regions() {
                println!(
                    "  region {:>2}: keys {:.6}, non-keys {:.6}, rate {:.6}",
                    k + 1,
                    profile.final_key_frac(d - 1, k),
                    profile.final_nonkey_frac(d - 1, k),
                    cfg.final_fprs()[k]
                );
            }
            let costs = c.ensemble().model_costs()?;
            let mem_bits = analytic_memory_bits(cfg, &costs, profile);
            println!(
                "analytic memory: {:.0} bytes ({} model + {:.0} filter)",
                mem_bits / 8.0,
                c.model_bytes(),
                mem_bits / 8.0 - c.model_bytes() as f64
            );
            println!(
                "analytic fpr: {:.3e} (budget {:.3e})",
                analytic_fpr(cfg, profile),
                cfg.f_target()
            );
            println!(
                "analytic reject time: {:.2} ns/query (model inference only)",
                analytic_reject_time_ns(cfg, &costs, profile)
            );
            println!("built total bytes: {}", c.total_bytes());
        }
        AnyStructure::Classic(f) => {
            println!("structure: classical Bloom filter");
            println!("keys stored: {}", f.capacity_keys());
            println!("target fpr: {}", f.target_fpr());
            println!("bits: {} ({} hashes)", f.size_bits(), f.num_hashes());
        }
        AnyStructure::Partitioned(p) => {
            println!("structure: partitioned learned Bloom filter");
            println!("keys stored: {}", p.key_count());
            println!("model depth: {}", p.depth());
            println!("target fpr F: {}", p.f_target());
            println!("analytic fpr: {:.3e}", p.analytic_fpr());
            println!("partition: {}", fmt_vec(p.boundaries()));
            println!("region rates: {}", fmt_vec(p.region_fprs()));
            println!("total bytes: {}", p.total_bytes());
        }
        AnyStructure::Sandwich(s) => {
            println!("structure: sandwiched learned Bloom filter");
            println!("keys stored: {}", s.key_count());
            println!("model depth: {}", s.depth());
            println!("threshold: {:.6}", s.threshold());
            println!("pre-filter rate: {:.6}", s.pre_fpr());
            println!("backup rate: {:.6}", s.backup_fpr());
            println!("analytic fpr: {:.3e}", s.analytic_fpr());
            println!("total bytes: {}", s.total_bytes());
        }
    }

    let trace_path = trace_path_for(&args.filter);
    if trace_path.exists() {
        summarize_trace(&trace_path)?;
    }
    Ok(())
}

fn summarize_trace(path: &std::path::Path) -> CliResult<()> {
    let text = std::fs::read_to_string(path)?;
    let mut alphas: Vec<(f64, f64)> = Vec::new();
    let mut states = 0usize;
    let mut chosen: Option<serde_json::Value> = None;
    let mut header: Option<serde_json::Value> = None;
    for line in text.lines() {
        let v: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(_) => continue,
        };
        match v.get("type").and_then(|t| t.as_str()) {
            Some("header") => header = Some(v),
            Some("alpha") => {
                if let (Some(a), Some(o)) = (
                    v.get("alpha").and_then(|x| x.as_f64()),
                    v.get("objective").and_then(|x| x.as_f64()),
                ) {
                    alphas.push((a, o));
                }
            }
            Some("state") => states += 1,
            Some("chosen") => chosen = Some(v),
            _ => {}
        }
    }
    println!("optimizer trace: {} ({} decision states)", path.display(), states);
    if let Some(h) = header {
        println!(
            "  scales: memory {} bits, reject {} ns",
            h.get("mem_scale_bits").unwrap_or(&serde_json::Value::Null),
            h.get("time_scale_ns").unwrap_or(&serde_json::Value::Null)
        );
    }
    for (a, o) in &alphas {
        println!("  alpha {a:<8}: best objective {o:.6}");
    }
    if let Some(c) = chosen {
        println!(
            "  chosen: alpha {}, objective {}, depth {}",
            c.get("alpha").unwrap_or(&serde_json::Value::Null),
            c.get("objective").unwrap_or(&serde_json::Value::Null),
            c.get("depth").unwrap_or(&serde_json::Value::Null)
        );
    }
    Ok(())
}
