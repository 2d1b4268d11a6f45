//! Uniform tensor-product space-time discretization.
//!
//! Unknowns live at cell centers. Time nodes are `t_n = n·T/N` for
//! `n = 0..=N`, so both `t = 0` and `t = T` are represented.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw grid parameters as they appear in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Physical extent per axis (one entry in 1D, two in 2D).
    pub lengths: Vec<f64>,
    /// Number of cells per axis.
    pub cells: Vec<usize>,
    pub num_time_steps: usize,
    pub final_time: f64,
}

/// Validated grid. Copyable so fields can carry their own geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    lengths: [f64; 2],
    cells: [usize; 2],
    spacing: f64,
    num_time_steps: usize,
    final_time: f64,
    dt: f64,
}

/// Relative tolerance used when checking that both axes share one spacing.
const SPACING_TOLERANCE: f64 = 1e-12;

pub fn build_grid(config: &GridConfig) -> Result<Grid> {
    let dim = config.lengths.len();
    if !(1..=2).contains(&dim) {
        return Err(Error::config(
            "grid.lengths",
            format!("expected 1 or 2 axes, got {dim}"),
        ));
    }
    if config.cells.len() != dim {
        return Err(Error::config(
            "grid.cells",
            format!(
                "expected {dim} entries to match grid.lengths, got {}",
                config.cells.len()
            ),
        ));
    }
    for (axis, &len) in config.lengths.iter().enumerate() {
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::config(
                format!("grid.lengths[{axis}]"),
                format!("extent must be positive and finite, got {len}"),
            ));
        }
    }
    for (axis, &n) in config.cells.iter().enumerate() {
        if n == 0 {
            return Err(Error::config(
                format!("grid.cells[{axis}]"),
                "cell count must be positive",
            ));
        }
    }
    if config.num_time_steps == 0 {
        return Err(Error::config(
            "grid.num_time_steps",
            "number of time steps must be positive",
        ));
    }
    if !(config.final_time.is_finite() && config.final_time > 0.0) {
        return Err(Error::config(
            "grid.final_time",
            format!(
                "final time must be positive and finite, got {}",
                config.final_time
            ),
        ));
    }

    let spacing = config.lengths[0] / config.cells[0] as f64;
    if dim == 2 {
        let hy = config.lengths[1] / config.cells[1] as f64;
        if ((hy - spacing) / spacing).abs() > SPACING_TOLERANCE {
            return Err(Error::config(
                "grid.cells",
                format!("2D grids need equal spacing per axis (hx = {spacing}, hy = {hy})"),
            ));
        }
    }

    let mut lengths = [0.0; 2];
    let mut cells = [1usize; 2];
    lengths[..dim].copy_from_slice(&config.lengths);
    cells[..dim].copy_from_slice(&config.cells);

    Ok(Grid {
        dim,
        lengths,
        cells,
        spacing,
        num_time_steps: config.num_time_steps,
        final_time: config.final_time,
        dt: config.final_time / config.num_time_steps as f64,
    })
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    pub fn cells_per_axis(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    /// Cell width `h`, identical on every axis.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn num_cells(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    /// `h^dim`
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// `|Ω|`
    pub fn domain_measure(&self) -> f64 {
        self.lengths().iter().product()
    }

    pub fn num_time_steps(&self) -> usize {
        self.num_time_steps
    }

    pub fn num_time_nodes(&self) -> usize {
        self.num_time_steps + 1
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time of node `n`, computed as `n·T/N` so that `t_N == T` exactly.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.final_time / self.num_time_steps as f64
    }

    /// Flat index of cell `(i, j)`; `i` runs along x fastest.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.cells[0] + i
    }

    /// Inverse of [`Grid::index`].
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.cells[0], idx / self.cells[0])
    }

    /// Cell center coordinates. The second component is zero in 1D.
    pub fn cell_center(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.ij(idx);
        let x = (i as f64 + 0.5) * self.spacing;
        let y = if self.dim == 2 {
            (j as f64 + 0.5) * self.spacing
        } else {
            0.0
        };
        [x, y]
    }

    pub fn cell_centers(&self) -> Vec<[f64; 2]> {
        (0..self.num_cells()).map(|c| self.cell_center(c)).collect()
    }

    /// Same geometry and time partition.
    pub fn compatible(&self, other: &Grid) -> bool {
        self == other
    }
}
