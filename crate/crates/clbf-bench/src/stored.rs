//! Uniform access to any serialized structure, dispatched by magic tag.

use std::path::Path;

use clbf::baselines::{classic_from_bytes, classic_to_bytes};
use clbf::bloom::BloomFilter;
use clbf::{Clbf64, Plbf64, Sandwiched64};

use crate::{CliError, CliResult};

pub enum AnyStructure {
    Cascade(Clbf64),
    Classic(BloomFilter),
    Partitioned(Plbf64),
    Sandwich(Sandwiched64),
}

impl AnyStructure {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> CliResult<Self> {
        if bytes.len() < 9 {
            return Err(CliError::Io("file too short to carry a magic tag".into()));
        }
        match &bytes[..7] {
            b"CLBF-V1" => Ok(AnyStructure::Cascade(Clbf64::from_bytes(bytes)?)),
            _ => match &bytes[..9] {
                b"CLBF-CBF1" => Ok(AnyStructure::Classic(classic_from_bytes(bytes)?)),
                b"CLBF-PLB1" => Ok(AnyStructure::Partitioned(Plbf64::from_bytes(bytes)?)),
                b"CLBF-SWB1" => Ok(AnyStructure::Sandwich(Sandwiched64::from_bytes(bytes)?)),
                other => Err(CliError::Io(format!(
                    "unknown container tag {:?}",
                    String::from_utf8_lossy(other)
                ))),
            },
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            AnyStructure::Cascade(c) => c.to_bytes(),
            AnyStructure::Classic(f) => classic_to_bytes(f),
            AnyStructure::Partitioned(p) => p.to_bytes(),
            AnyStructure::Sandwich(s) => s.to_bytes(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AnyStructure::Cascade(_) => "clbf",
            AnyStructure::Classic(_) => "classic",
            AnyStructure::Partitioned(_) => "plbf",
            AnyStructure::Sandwich(_) => "sandwiched",
        }
    }

    /// Query with the number of weak learners evaluated.
    #[inline]
    pub fn query_stats(&self, features: &[f64], identity: &[u8]) -> (bool, usize) {
        match self {
            AnyStructure::Cascade(c) => {
                let s = c.query_with_stats(features, identity);
                (s.found, s.model_evals)
            }
            AnyStructure::Classic(f) => (f.contains(identity), 0),
            AnyStructure::Partitioned(p) => {
                (p.query(features, identity), p.model_evals_per_query())
            }
            AnyStructure::Sandwich(s) => s.query_with_evals(features, identity),
        }
    }

    /// Feature count the structure's model expects; `None` when queries
    /// never touch features (classical filter, degenerate cascade).
    pub fn num_features(&self) -> Option<usize> {
        match self {
            AnyStructure::Cascade(c) if !c.config().is_degenerate() => {
                Some(c.ensemble().num_features())
            }
            AnyStructure::Cascade(_) | AnyStructure::Classic(_) => None,
            AnyStructure::Partitioned(p) => Some(p.ensemble().num_features()),
            AnyStructure::Sandwich(s) => Some(s.ensemble().num_features()),
        }
    }

    /// Model-inference nanoseconds attributable to `evals` weak learners.
    pub fn model_ns_of_evals(&self, evals: usize) -> f64 {
        let times = match self {
            AnyStructure::Cascade(c) => c.ensemble().per_tree_time_ns(),
            AnyStructure::Partitioned(p) => p.ensemble().per_tree_time_ns(),
            AnyStructure::Sandwich(s) => s.ensemble().per_tree_time_ns(),
            AnyStructure::Classic(_) => None,
        };
        times.map_or(0.0, |t| t[..evals.min(t.len())].iter().sum())
    }

    pub fn model_bytes(&self) -> u64 {
        match self {
            AnyStructure::Cascade(c) => c.model_bytes() as u64,
            AnyStructure::Classic(_) => 0,
            AnyStructure::Partitioned(p) => p.model_bytes() as u64,
            AnyStructure::Sandwich(s) => s.model_bytes() as u64,
        }
    }

    pub fn total_bytes(&self) -> u64 {
        match self {
            AnyStructure::Cascade(c) => c.total_bytes(),
            AnyStructure::Classic(f) => f.size_bits().div_ceil(8),
            AnyStructure::Partitioned(p) => p.total_bytes(),
            AnyStructure::Sandwich(s) => s.total_bytes(),
        }
    }

    /// (f_target, lambda, depth, regions) as available per structure.
    pub fn shape(&self) -> (f64, f64, usize, usize) {
        match self {
            AnyStructure::Cascade(c) => {
                let cfg = c.config();
                (
                    cfg.f_target(),
                    cfg.lambda(),
                    cfg.depth(),
                    cfg.num_regions(),
                )
            }
            AnyStructure::Classic(f) => (f.target_fpr(), 1.0, 0, 0),
            AnyStructure::Partitioned(p) => {
                (p.f_target(), 1.0, p.depth(), p.region_fprs().len())
            }
            AnyStructure::Sandwich(s) => (s.analytic_fpr(), 1.0, s.depth(), 1),
        }
    }
}
