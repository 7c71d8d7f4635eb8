//! CSV traces and the per-solver summary table.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::run::{RunRecord, RunStatus, TraceRow};

pub const TRACE_HEADER: [&str; 8] = [
    "epoch",
    "eta",
    "T",
    "oracle_calls",
    "objective_gap",
    "gap_k",
    "delta_k",
    "elapsed_s",
];

pub const SUMMARY_HEADER: [&str; 10] = [
    "solver",
    "runs",
    "completed",
    "early_stopped",
    "failed",
    "median_final_objective_gap",
    "median_final_gap_k",
    "median_oracle_calls",
    "median_wall_s",
    "median_holdout_auc",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

pub fn trace_file_name(record: &RunRecord) -> String {
    format!("trace_{}_{}.csv", record.solver, record.seed)
}

/// Median of the values present; the mean of the middle two for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Writes one trace per record plus `summary.csv`; returns the paths.
pub fn emit_csv(records: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::with_capacity(records.len() + 1);
    for record in records {
        let path = dir.join(trace_file_name(record));
        write_trace(&path, &record.rows)?;
        written.push(path);
    }
    let path = dir.join("summary.csv");
    write_summary(&path, records)?;
    written.push(path);
    Ok(written)
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<(), OutputError> {
    let csv_err = |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.epoch.to_string(),
            cell(r.eta),
            r.t.to_string(),
            r.oracle_calls.to_string(),
            cell(r.objective_gap),
            cell(r.gap_k),
            cell(r.delta_k),
            cell(r.elapsed_s),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, OutputError> {
    let csv_err = |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(OutputError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = i + 2;
        let bad = |message: String| OutputError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let opt = |k: usize| -> Result<Option<f64>, OutputError> {
            match &record[k] {
                "" => Ok(None),
                s => s
                    .parse()
                    .map(Some)
                    .map_err(|e| bad(format!("{}: {s:?}: {e}", TRACE_HEADER[k]))),
            }
        };
        let int = |k: usize| -> Result<u64, OutputError> {
            record[k]
                .parse()
                .map_err(|e| bad(format!("{}: {:?}: {e}", TRACE_HEADER[k], &record[k])))
        };
        rows.push(TraceRow {
            epoch: int(0)? as usize,
            eta: opt(1)?,
            t: int(2)?,
            oracle_calls: int(3)?,
            objective_gap: opt(4)?,
            gap_k: opt(5)?,
            delta_k: opt(6)?,
            elapsed_s: opt(7)?,
        });
    }
    Ok(rows)
}

fn write_summary(path: &Path, records: &[RunRecord]) -> Result<(), OutputError> {
    let csv_err = |source| OutputError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    let mut names: Vec<&str> = Vec::new();
    for r in records {
        if !names.contains(&r.solver.as_str()) {
            names.push(&r.solver);
        }
    }
    for name in names {
        let group: Vec<&RunRecord> = records.iter().filter(|r| r.solver == name).collect();
        let ok: Vec<&RunRecord> = group
            .iter()
            .copied()
            .filter(|r| !matches!(r.status, RunStatus::Failed(_)))
            .collect();
        let count = |f: fn(&RunStatus) -> bool| group.iter().filter(|r| f(&r.status)).count();
        let med = |f: fn(&RunRecord) -> Option<f64>| {
            median(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
        };
        w.write_record([
            name.to_string(),
            group.len().to_string(),
            count(|s| *s == RunStatus::Completed).to_string(),
            count(|s| *s == RunStatus::EarlyStopped).to_string(),
            count(|s| matches!(s, RunStatus::Failed(_))).to_string(),
            cell(med(|r| r.summary.final_objective_gap)),
            cell(med(|r| r.summary.final_gap_k)),
            cell(med(|r| Some(r.summary.total_oracle_calls as f64))),
            cell(med(|r| r.summary.wall_seconds)),
            cell(med(|r| r.summary.holdout_auc)),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, f64::MIN_POSITIVE, 5e-324] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
