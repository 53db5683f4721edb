//! CSV ingestion and persistence of datasets and reports.
//!
//! Dataset CSV: one row per point, columns `x1..xd` followed by an optional `y`.
//! A header row is optional and is recognized by a non-numeric first field. With
//! a header, outputs are present iff the last column is named `y`; without one
//! the caller says whether the last column holds outputs.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DVector;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IngestOptions {
    /// Whether the last column holds outputs when the file has no header.
    pub outputs_without_header: bool,
    /// Norm bound to use instead of the largest point norm.
    pub lambda_x: Option<f64>,
}

pub fn ingest_csv(path: &Path, opts: IngestOptions) -> Result<Dataset> {
    parse_csv(File::open(path)?, opts)
}

pub fn parse_csv<R: Read>(reader: R, opts: IngestOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut has_outputs = opts.outputs_without_header;
    let mut width: Option<usize> = None;
    let mut points = Vec::new();
    let mut outputs = Vec::new();

    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::data(Some(row), e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if idx == 0 && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            has_outputs = record.iter().next_back().is_some_and(|h| h.eq_ignore_ascii_case("y"));
            width = Some(record.len());
            continue;
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(col, f)| {
                f.parse::<f64>()
                    .map_err(|_| Error::data(Some(row), format!("column {} is not a number: {f:?}", col + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            Some(w) if w != values.len() => {
                return Err(Error::data(
                    Some(row),
                    format!("expected {w} columns, found {}", values.len()),
                ))
            }
            None => width = Some(values.len()),
            _ => {}
        }
        let split = values.len() - usize::from(has_outputs);
        if split == 0 {
            return Err(Error::data(Some(row), "row has no input columns"));
        }
        if has_outputs {
            let y = values[split];
            if !(y.abs() <= 0.5) {
                return Err(Error::data(Some(row), format!("output {y} outside [-1/2, 1/2]")));
            }
            outputs.push(y);
        }
        points.push(DVector::from_column_slice(&values[..split]));
    }
    let outputs = has_outputs.then_some(outputs);
    match opts.lambda_x {
        Some(lx) => Dataset::new(points, outputs, lx),
        None => Dataset::with_inferred_bound(points, outputs),
    }
}

/// Writes the dataset with a header and 17 significant digits, which round-trips exactly.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=data.dim()).map(|j| format!("x{j}")).collect();
    if data.has_outputs() {
        header.push("y".into());
    }
    w.write_record(&header)?;
    for (i, x) in data.points().iter().enumerate() {
        let mut row: Vec<String> = x.iter().map(|v| format!("{v:.16e}")).collect();
        if let Some(ys) = data.outputs() {
            row.push(format!("{:.16e}", ys[i]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(data: &Dataset, path: &Path) -> Result<()> {
    write_csv(data, BufWriter::new(File::create(path)?))
}

/// Writes `value` as pretty JSON followed by a newline.
pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
