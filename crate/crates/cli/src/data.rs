//! CSV ingestion.

use std::path::Path;

use bnqd::{Dataset, Points};

use crate::error::{CliError, Result};

/// Reads the predictor and response columns of a headed CSV file.
///
/// Cells must be plain decimal-point numbers; anything else is reported
/// with its 1-based data row and column name.
pub fn load_csv(path: &Path, x_columns: &[String], y_column: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("cannot read header of {}: {e}", path.display())))?
        .clone();
    if headers.is_empty() {
        return Err(CliError::Data(format!("{} is empty", path.display())));
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(format!("column '{name}' not found in {}", path.display())))
    };
    let x_idx = x_columns.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
    let y_idx = find(y_column)?;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let cell = |idx: usize| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            let name = &headers[idx];
            parse_number(raw).ok_or_else(|| {
                CliError::Data(format!("row {}, column '{name}': '{raw}' is not a finite decimal number", row + 1))
            })
        };
        for &i in &x_idx {
            xs.push(cell(i)?);
        }
        ys.push(cell(y_idx)?);
    }
    if ys.is_empty() {
        return Err(CliError::Data(format!("{} has no data rows", path.display())));
    }
    let points = Points::new(x_idx.len(), xs)?;
    Ok(Dataset::new(points, ys)?)
}

/// Accepts digits, one optional sign, one decimal point and an exponent;
/// rejects `inf`, `nan` and comma decimals.
fn parse_number(raw: &str) -> Option<f64> {
    if raw.is_empty() || !raw.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')) {
        return None;
    }
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}
