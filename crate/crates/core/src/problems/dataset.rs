//! CSV ingestion of external datasets.
//!
//! Schema: a header row `x1,…,xd,f,g1,…,gd` followed by one row per
//! evaluation point. `d` is inferred from the header.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::EvaluationSet;
use crate::error::{Error, Result};

fn expected_header(d: usize) -> Vec<String> {
    let mut h: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    h.push("f".into());
    h.extend((1..=d).map(|i| format!("g{i}")));
    h
}

/// Parses a dataset from any reader.
pub fn parse_dataset_csv<R: Read>(reader: R) -> Result<EvaluationSet> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let cols = header.len();
    if cols < 3 || cols % 2 == 0 {
        return Err(Error::Parse(format!("header has {cols} columns; expected 2d+1 for x1..xd,f,g1..gd")));
    }
    let d = (cols - 1) / 2;
    if header != expected_header(d) {
        return Err(Error::Parse(format!(
            "header {:?} does not match {:?}",
            header,
            expected_header(d)
        )));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        if record.len() != cols {
            return Err(Error::Parse(format!("row {} has {} fields, expected {cols}", line + 1, record.len())));
        }
        let row = record
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: '{s}': {e}", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("row {} contains a non-finite value", line + 1)));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("dataset has no rows".into()));
    }
    let n = rows.len();
    let points = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let values = DVector::from_fn(n, |i, _| rows[i][d]);
    let gradients = DMatrix::from_fn(n, d, |i, j| rows[i][d + 1 + j]);
    EvaluationSet::new(points, values, gradients)
}

pub fn read_dataset_csv(path: &Path) -> Result<EvaluationSet> {
    let file = std::fs::File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_dataset_csv(file)
}

/// Writes a dataset in full double precision.
pub fn write_dataset_csv<W: Write>(es: &EvaluationSet, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(expected_header(es.dim())).map_err(io)?;
    for a in 0..es.n_points() {
        let mut row: Vec<String> = es.points().row(a).iter().map(|v| format!("{v:e}")).collect();
        row.push(format!("{:e}", es.values()[a]));
        row.extend(es.gradients().row(a).iter().map(|v| format!("{v:e}")));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}
