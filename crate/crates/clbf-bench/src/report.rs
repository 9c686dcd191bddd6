//! Benchmark report rows and their stable CSV schema.

use crate::{CliError, CliResult};

/// Column order of every emitted CSV. Kept stable; the parser round-trips
/// rows exactly (floats print in shortest round-trip form).
pub const CSV_HEADER: &str = "structure,dataset,f_target,lambda,rounds,depth,regions,max_depth,\
model_bytes,filter_bytes,total_bytes,fpr,fpr_stderr,reject_model_ns,reject_e2e_ns,accept_ns,\
build_ms,optimize_ms";

/// One measured structure under one parameter setting.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub structure: String,
    pub dataset: String,
    pub f_target: f64,
    pub lambda: f64,
    /// Trees available to the builder.
    pub rounds: usize,
    /// Trees the built structure actually uses.
    pub depth: usize,
    pub regions: usize,
    pub max_depth: usize,
    pub model_bytes: u64,
    pub filter_bytes: u64,
    pub total_bytes: u64,
    pub fpr: f64,
    pub fpr_stderr: f64,
    /// Mean model-inference time attributable to a rejected query.
    pub reject_model_ns: f64,
    /// Mean wall-clock latency of a rejected query.
    pub reject_e2e_ns: f64,
    /// Mean wall-clock latency of an accepted query.
    pub accept_ns: f64,
    pub build_ms: f64,
    pub optimize_ms: f64,
}

impl BenchReport {
    pub fn to_csv_row(&self) -> String {
        assert_eq!(
            self.model_bytes + self.filter_bytes,
            self.total_bytes,
            "memory components must sum to the total"
        );
        assert!(
            !self.structure.contains(',') && !self.dataset.contains(','),
            "name fields must not contain the delimiter"
        );
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.structure,
            self.dataset,
            self.f_target,
            self.lambda,
            self.rounds,
            self.depth,
            self.regions,
            self.max_depth,
            self.model_bytes,
            self.filter_bytes,
            self.total_bytes,
            self.fpr,
            self.fpr_stderr,
            self.reject_model_ns,
            self.reject_e2e_ns,
            self.accept_ns,
            self.build_ms,
            self.optimize_ms
        )
    }

    pub fn from_csv_row(row: &str) -> CliResult<Self> {
        let fields: Vec<&str> = row.split(',').collect();
        let expected = CSV_HEADER.split(',').count();
        if fields.len() != expected {
            return Err(CliError::Parse(format!(
                "report row has {} fields, expected {expected}",
                fields.len()
            )));
        }
        let f = |i: usize| -> CliResult<f64> {
            fields[i]
                .parse()
                .map_err(|_| CliError::Parse(format!("bad float {:?} in column {i}", fields[i])))
        };
        let u = |i: usize| -> CliResult<u64> {
            fields[i]
                .parse()
                .map_err(|_| CliError::Parse(format!("bad integer {:?} in column {i}", fields[i])))
        };
        Ok(BenchReport {
            structure: fields[0].to_string(),
            dataset: fields[1].to_string(),
            f_target: f(2)?,
            lambda: f(3)?,
            rounds: u(4)? as usize,
            depth: u(5)? as usize,
            regions: u(6)? as usize,
            max_depth: u(7)? as usize,
            model_bytes: u(8)?,
            filter_bytes: u(9)?,
            total_bytes: u(10)?,
            fpr: f(11)?,
            fpr_stderr: f(12)?,
            reject_model_ns: f(13)?,
            reject_e2e_ns: f(14)?,
            accept_ns: f(15)?,
            build_ms: f(16)?,
            optimize_ms: f(17)?,
        })
    }
}

/// Append rows to a CSV file, writing the header if the file is new.
pub fn append_rows(path: &std::path::Path, rows: &[BenchReport]) -> CliResult<()> {
    let mut out = String::new();
    let fresh = !path.exists();
    if fresh {
        out.push_str(CSV_HEADER);
        out.push('\n');
    }
    for r in rows {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    use std::io::Write;
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Read a report CSV produced by this harness.
pub fn read_rows(path: &std::path::Path) -> CliResult<Vec<BenchReport>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(CliError::Parse(format!(
                "unexpected report header: {other:?}"
            )))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(BenchReport::from_csv_row)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BenchReport {
        BenchReport {
            structure: "clbf".into(),
            dataset: "sep(delta=1)".into(),
            f_target: 0.001,
            lambda: 0.3,
            rounds: 100,
            depth: 7,
            regions: 5,
            max_depth: 6,
            model_bytes: 1234,
            filter_bytes: 56789,
            total_bytes: 58023,
            fpr: 0.00092,
            fpr_stderr: 0.000135,
            reject_model_ns: 12.75,
            reject_e2e_ns: 190.5,
            accept_ns: 410.25,
            build_ms: 1523.125,
            optimize_ms: 88.5,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let r = sample();
        let back = BenchReport::from_csv_row(&r.to_csv_row()).unwrap();
        assert_eq!(r, back);
    }

    #[test]
    fn header_matches_field_count() {
        assert_eq!(
            CSV_HEADER.split(',').count(),
            sample().to_csv_row().split(',').count()
        );
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join("clbf_bench_report_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rows.csv");
        let _ = std::fs::remove_file(&path);
        append_rows(&path, &[sample()]).unwrap();
        append_rows(&path, &[sample()]).unwrap();
        let rows = read_rows(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], sample());
    }

    #[test]
    #[should_panic(expected = "sum to the total")]
    fn inconsistent_totals_rejected() {
        let mut r = sample();
        r.total_bytes += 1;
        let _ = r.to_csv_row();
    }
}
