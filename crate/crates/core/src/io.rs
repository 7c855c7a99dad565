//! CSV ingestion.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};

pub const HOUSING_ROWS: usize = 506;

const HOUSING_RAW: [&str; 14] = [
    "CRIM", "ZN", "INDUS", "CHAS", "NOX", "RM", "AGE", "DIS", "RAD", "TAX", "PTRATIO", "B", "LSTAT",
    "MEDV",
];

/// Predictor columns produced by [`load_housing`], in hedonic-model order.
pub const HOUSING_COLUMNS: [&str; 13] = [
    "RM2", "AGE", "LOG_DIS", "LOG_RAD", "TAX", "PTRATIO", "B", "LOG_LSTAT", "CRIM", "ZN", "INDUS",
    "CHAS", "NOX2",
];

struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_table<R: Read>(reader: R) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Ingestion(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Ingestion(e.to_string()))?;
        let row = rec
            .iter()
            .zip(&header)
            .map(|(v, h)| {
                v.parse::<f64>().map_err(|_| {
                    Error::Ingestion(format!("row {}: column {h}: cannot parse '{v}'", i + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != header.len() {
            return Err(Error::Ingestion(format!(
                "row {} has {} fields, header has {}",
                i + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok(RawTable { header, rows })
}

/// Numeric CSV with a header; `response` names the target column and every
/// other column becomes a predictor.
pub fn read_csv<R: Read>(reader: R, response: &str) -> Result<Dataset> {
    let t = read_table(reader)?;
    let yi = t
        .header
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| Error::Ingestion(format!("missing response column '{response}'")))?;
    let names: Vec<String> = t
        .header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != yi)
        .map(|(_, h)| h.clone())
        .collect();
    let p = names.len();
    let mut x = Vec::with_capacity(t.rows.len() * p);
    let mut y = Vec::with_capacity(t.rows.len());
    for row in &t.rows {
        for (j, v) in row.iter().enumerate() {
            if j != yi {
                x.push(*v);
            }
        }
        y.push(row[yi]);
    }
    Dataset::new(x, p, y, Some(names))
}

pub fn load_csv(path: &Path, response: &str) -> Result<Dataset> {
    let f = std::fs::File::open(path).map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
    read_csv(f, response)
}

fn positive_log(v: f64, row: usize, col: &str) -> Result<f64> {
    if v > 0.0 {
        Ok(v.ln())
    } else {
        Err(Error::Ingestion(format!(
            "row {row}: {col} = {v} must be positive to take a log"
        )))
    }
}

/// Housing table with `log(MEDV)` as response and the derived hedonic
/// regressors listed in [`HOUSING_COLUMNS`].
pub fn read_housing<R: Read>(reader: R) -> Result<Dataset> {
    let t = read_table(reader)?;
    let pos: HashMap<&str, usize> = HOUSING_RAW
        .iter()
        .map(|&c| {
            t.header
                .iter()
                .position(|h| h == c)
                .map(|j| (c, j))
                .ok_or_else(|| Error::Ingestion(format!("missing column {c}")))
        })
        .collect::<Result<_>>()?;
    if t.rows.len() != HOUSING_ROWS {
        log::warn!(
            "housing table has {} rows, expected {HOUSING_ROWS}; continuing",
            t.rows.len()
        );
    }
    let mut x = Vec::with_capacity(t.rows.len() * HOUSING_COLUMNS.len());
    let mut y = Vec::with_capacity(t.rows.len());
    for (i, row) in t.rows.iter().enumerate() {
        let r = i + 1;
        let g = |c: &str| row[pos[c]];
        let chas = g("CHAS");
        if chas != 0.0 && chas != 1.0 {
            return Err(Error::Ingestion(format!("row {r}: CHAS = {chas} not in {{0, 1}}")));
        }
        let age = g("AGE");
        if !(0.0..=100.0).contains(&age) {
            return Err(Error::Ingestion(format!("row {r}: AGE = {age} outside [0, 100]")));
        }
        y.push(positive_log(g("MEDV"), r, "MEDV")?);
        x.extend_from_slice(&[
            g("RM").powi(2),
            age,
            positive_log(g("DIS"), r, "DIS")?,
            positive_log(g("RAD"), r, "RAD")?,
            g("TAX"),
            g("PTRATIO"),
            g("B"),
            positive_log(g("LSTAT"), r, "LSTAT")?,
            g("CRIM"),
            g("ZN"),
            g("INDUS"),
            chas,
            g("NOX").powi(2),
        ]);
    }
    Dataset::new(
        x,
        HOUSING_COLUMNS.len(),
        y,
        Some(HOUSING_COLUMNS.iter().map(|s| s.to_string()).collect()),
    )
}

pub fn load_housing(path: &Path) -> Result<Dataset> {
    let f = std::fs::File::open(path).map_err(|e| Error::Ingestion(format!("{}: {e}", path.display())))?;
    read_housing(f)
}
