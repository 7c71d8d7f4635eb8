//! Labeled datasets as CSV: header `f0,...,f{d-1},label`, labels `±1`.

use std::path::{Path, PathBuf};

use pes_core::{AucDataset, Matrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub fn read_dataset(path: &Path) -> Result<AucDataset, DatasetError> {
    let csv_err = |source| DatasetError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let fmt_err = |message: String| DatasetError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let d = headers
        .len()
        .checked_sub(1)
        .filter(|d| *d > 0)
        .ok_or_else(|| fmt_err("need at least one feature column and a label column".into()))?;
    for (i, h) in headers.iter().enumerate() {
        let expected = if i == d {
            "label".to_string()
        } else {
            format!("f{i}")
        };
        if h != expected {
            return Err(fmt_err(format!(
                "column {i} is {h:?}, expected {expected:?}"
            )));
        }
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = line + 2;
        for field in record.iter().take(d) {
            features.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| fmt_err(format!("line {row}: {field:?}: {e}")))?,
            );
        }
        let label = match record[d].trim() {
            "1" | "+1" => 1,
            "-1" => -1,
            other => return Err(fmt_err(format!("line {row}: label {other:?} is not +1/-1"))),
        };
        labels.push(label);
    }
    let matrix =
        Matrix::from_row_major(labels.len(), d, features).map_err(|e| fmt_err(e.to_string()))?;
    AucDataset::new(matrix, labels).map_err(|e| fmt_err(e.to_string()))
}

pub fn write_dataset(path: &Path, data: &AucDataset) -> Result<(), DatasetError> {
    let csv_err = |source| DatasetError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    let d = data.dim();
    let mut header: Vec<String> = (0..d).map(|i| format!("f{i}")).collect();
    header.push("label".into());
    writer.write_record(&header).map_err(csv_err)?;
    for (i, label) in data.labels.iter().enumerate() {
        let mut row: Vec<String> = data
            .features
            .row(i)
            .iter()
            .map(|v| crate::output::format_float(*v))
            .collect();
        row.push(label.to_string());
        writer.write_record(&row).map_err(csv_err)?;
    }
    writer.flush().map_err(|e| csv_err(e.into()))
}
