//! Field dumps: one row per cell, one column per time node.
//!
//! Header: `cell,x[,y],t=<t_0>,…,t=<t_N>`. Every float is written with 17
//! significant digits so that files round-trip bit for bit.

use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{FieldRole, SpaceTimeField};
use crate::grid::Grid;

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn field_to_csv(field: &SpaceTimeField) -> Result<Vec<u8>> {
    let grid = field.grid();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["cell".to_string(), "x".to_string()];
    if grid.dim() == 2 {
        header.push("y".into());
    }
    header.extend((0..grid.num_time_nodes()).map(|n| format!("t={}", format_float(grid.time(n)))));
    w.write_record(&header).map_err(csv_error)?;
    for c in 0..grid.num_cells() {
        let p = grid.cell_center(c);
        let mut row = vec![c.to_string(), format_float(p[0])];
        if grid.dim() == 2 {
            row.push(format_float(p[1]));
        }
        row.extend((0..grid.num_time_nodes()).map(|n| format_float(field.get(c, n))));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.into_inner()
        .map_err(|e| Error::io("flushing CSV buffer", e.into_error()))
}

fn csv_error(e: csv::Error) -> Error {
    Error::io("CSV", e.into())
}

/// Value columns of a field CSV, one `Vec` per cell.
fn read_columns(path: &Path, grid: &Grid) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e.into()))?;
    let skip = 1 + grid.dim();
    let headers = r.headers().map_err(csv_error)?.clone();
    if headers.len() <= skip {
        return Err(Error::Shape(format!("{}: no time columns", path.display())));
    }
    let mut rows = Vec::with_capacity(grid.num_cells());
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let row = rec
            .iter()
            .skip(skip)
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Shape(format!("{}: row {}: {e}", path.display(), k + 1)))?;
        rows.push(row);
    }
    if rows.len() != grid.num_cells() {
        return Err(Error::Shape(format!(
            "{}: expected {} cell rows, got {}",
            path.display(),
            grid.num_cells(),
            rows.len()
        )));
    }
    Ok(rows)
}

/// Reads the first time column as a per-cell state.
pub fn read_state_csv(path: &Path, grid: &Grid) -> Result<Vec<f64>> {
    Ok(read_columns(path, grid)?
        .into_iter()
        .map(|row| row[0])
        .collect())
}

pub fn read_field_csv(path: &Path, grid: &Grid, role: FieldRole) -> Result<SpaceTimeField> {
    let rows = read_columns(path, grid)?;
    let nodes = grid.num_time_nodes();
    if let Some(bad) = rows.iter().position(|r| r.len() != nodes) {
        return Err(Error::Shape(format!(
            "{}: row {} has {} time columns, expected {nodes}",
            path.display(),
            bad + 1,
            rows[bad].len()
        )));
    }
    Ok(SpaceTimeField::from_fn(grid, role, |c, n| rows[c][n]))
}
