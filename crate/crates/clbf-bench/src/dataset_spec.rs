//! Dataset argument parsing: either a CSV path or a generator spec of the
//! form `random:keys=20000,nonkeys=50000,dim=20`,
//! `sep:delta=1.0,keys=...`, or `clusters:c=64,keys=...`.
//! Generator counts default to the desk scale of 20k keys / 50k non-keys.

use std::path::{Path, PathBuf};

use clbf::Dataset64;

use crate::{CliError, CliResult};

pub const DESK_KEYS: usize = 20_000;
pub const DESK_NONKEYS: usize = 50_000;
pub const DEFAULT_DIM: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Csv(PathBuf),
    Random {
        keys: usize,
        nonkeys: usize,
        dim: usize,
    },
    Separation {
        delta: f64,
        keys: usize,
        nonkeys: usize,
        dim: usize,
    },
    Clusters {
        c: usize,
        keys: usize,
        nonkeys: usize,
        dim: usize,
    },
}

impl DatasetSpec {
    pub fn parse(arg: &str) -> CliResult<Self> {
        let Some((kind, rest)) = arg.split_once(':') else {
            return Ok(DatasetSpec::Csv(PathBuf::from(arg)));
        };
        match kind {
            "random" | "sep" | "clusters" => {}
            // a path with a colon in it
            _ => return Ok(DatasetSpec::Csv(PathBuf::from(arg))),
        }
        let mut keys = DESK_KEYS;
        let mut nonkeys = DESK_NONKEYS;
        let mut dim = DEFAULT_DIM;
        let mut delta: Option<f64> = None;
        let mut c: Option<usize> = None;
        for pair in rest.split(',').filter(|p| !p.is_empty()) {
            let (name, value) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Parse(format!("expected name=value, got {pair:?}")))?;
            let bad = |v: &str| CliError::Parse(format!("bad value {v:?} for {name}"));
            match name {
                "keys" => keys = value.parse().map_err(|_| bad(value))?,
                "nonkeys" => nonkeys = value.parse().map_err(|_| bad(value))?,
                "dim" => dim = value.parse().map_err(|_| bad(value))?,
                "delta" => delta = Some(value.parse().map_err(|_| bad(value))?),
                "c" => c = Some(value.parse().map_err(|_| bad(value))?),
                other => {
                    return Err(CliError::Parse(format!(
                        "unknown generator parameter {other:?}"
                    )))
                }
            }
        }
        match kind {
            "random" => Ok(DatasetSpec::Random { keys, nonkeys, dim }),
            "sep" => Ok(DatasetSpec::Separation {
                delta: delta
                    .ok_or_else(|| CliError::Parse("sep generator needs delta=".into()))?,
                keys,
                nonkeys,
                dim,
            }),
            "clusters" => Ok(DatasetSpec::Clusters {
                c: c.ok_or_else(|| CliError::Parse("clusters generator needs c=".into()))?,
                keys,
                nonkeys,
                dim,
            }),
            _ => unreachable!(),
        }
    }

    /// Short name for report rows; never contains a comma (the report CSV
    /// is comma-delimited without quoting).
    pub fn describe(&self) -> String {
        match self {
            DatasetSpec::Csv(p) => p.display().to_string().replace(',', ";"),
            DatasetSpec::Random { keys, nonkeys, dim } => {
                format!("random(keys={keys};nonkeys={nonkeys};dim={dim})")
            }
            DatasetSpec::Separation {
                delta,
                keys,
                nonkeys,
                dim,
            } => format!("sep(delta={delta};keys={keys};nonkeys={nonkeys};dim={dim})"),
            DatasetSpec::Clusters {
                c,
                keys,
                nonkeys,
                dim,
            } => format!("clusters(c={c};keys={keys};nonkeys={nonkeys};dim={dim})"),
        }
    }

    pub fn load(&self, seed: u64, label_column: &str, key_label: &str) -> CliResult<Dataset64> {
        let ds = match self {
            DatasetSpec::Csv(path) => {
                Dataset64::from_csv(Path::new(path), label_column, key_label)?
            }
            DatasetSpec::Random { keys, nonkeys, dim } => {
                Dataset64::gen_random(*keys, *nonkeys, *dim, seed)?
            }
            DatasetSpec::Separation {
                delta,
                keys,
                nonkeys,
                dim,
            } => Dataset64::gen_separation(*delta, *keys, *nonkeys, *dim, seed)?,
            DatasetSpec::Clusters {
                c,
                keys,
                nonkeys,
                dim,
            } => Dataset64::gen_clusters(*c, *keys, *nonkeys, *dim, seed)?,
        };
        Ok(ds)
    }
}

/// Parse a comma-separated numeric list argument.
pub fn parse_list<T: std::str::FromStr>(arg: &str, what: &str) -> CliResult<Vec<T>> {
    let items: Result<Vec<T>, _> = arg
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse())
        .collect();
    match items {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(CliError::Parse(format!("bad {what} list: {arg:?}"))),
    }
}
