//! Manufactured-solution convergence study for the forward solver.
//!
//! Uses `u_m(x,t) = ½(1 + cos(πx/L)·e^{−t})` on a homogeneous 1D domain,
//! with the matching volume source injected into the solver.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldRole, SpaceTimeField};
use crate::grid::{build_grid, GridConfig};
use crate::pde::{solve_forward_forced, ForwardProblem, SolverConfig};
use crate::tissue::TissueMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MmsConfig {
    pub length: f64,
    pub diffusion: f64,
    /// Net growth rate `a = ρ − R`.
    pub reaction: f64,
    pub final_time: f64,
    /// Fixed fine grid for the temporal study.
    pub temporal_cells: usize,
    pub temporal_steps: Vec<usize>,
    pub spatial_cells: Vec<usize>,
    /// Fixed fine time step count for the spatial study.
    pub spatial_steps: usize,
    pub solver: SolverConfig,
}

impl Default for MmsConfig {
    fn default() -> Self {
        MmsConfig {
            length: 1.0,
            diffusion: 0.1,
            reaction: 1.0,
            final_time: 0.5,
            temporal_cells: 1000,
            temporal_steps: vec![10, 20, 40, 80],
            spatial_cells: vec![8, 16, 32, 64],
            spatial_steps: 40_000,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel {
    pub h: f64,
    pub dt: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub levels: Vec<RefinementLevel>,
    /// Least-squares slope of `log error` against `log h` (or `log dt`).
    pub order: f64,
}

impl ConvergenceStudy {
    /// Successive error ratios between consecutive levels.
    pub fn ratios(&self) -> Vec<f64> {
        self.levels
            .windows(2)
            .map(|w| w[0].error / w[1].error)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmsReport {
    pub temporal: ConvergenceStudy,
    pub spatial: ConvergenceStudy,
}

impl MmsReport {
    pub fn temporal_ok(&self) -> bool {
        (self.temporal.order - 1.0).abs() <= 0.2
    }

    pub fn spatial_ok(&self) -> bool {
        (self.spatial.order - 2.0).abs() <= 0.2
    }

    pub fn passed(&self) -> bool {
        self.temporal_ok() && self.spatial_ok()
    }
}

#[derive(Debug, Clone, Copy)]
enum Manufactured {
    Cosine,
    Constant(f64),
}

impl Manufactured {
    fn value(self, length: f64, x: f64, t: f64) -> f64 {
        match self {
            Manufactured::Cosine => 0.5 * (1.0 + (PI * x / length).cos() * (-t).exp()),
            Manufactured::Constant(c) => c,
        }
    }

    /// `∂_t u − D ∂_xx u − a·u(1−u)`.
    fn source(self, length: f64, d: f64, a: f64, x: f64, t: f64) -> f64 {
        let u = self.value(length, x, t);
        let linear = match self {
            Manufactured::Cosine => {
                let k = PI / length;
                let mode = 0.5 * (k * x).cos() * (-t).exp();
                -mode + d * k * k * mode
            }
            Manufactured::Constant(_) => 0.0,
        };
        linear - a * u * (1.0 - u)
    }
}

/// Discrete `L²(Ω)` error at the final time for one grid.
fn final_error(
    config: &MmsConfig,
    cells: usize,
    steps: usize,
    exact: Manufactured,
) -> Result<RefinementLevel> {
    let grid = build_grid(&GridConfig {
        lengths: vec![config.length],
        cells: vec![cells],
        num_time_steps: steps,
        final_time: config.final_time,
    })?;
    let tissue = TissueMap::homogeneous(&grid, config.diffusion)?;
    let (l, d, a) = (config.length, config.diffusion, config.reaction);
    let u0 = grid
        .cell_centers()
        .iter()
        .map(|p| exact.value(l, p[0], 0.0))
        .collect();
    // ρ = 1 with R ≡ 1 − a realizes any net rate a.
    let problem = ForwardProblem::new(grid, tissue, 1.0, u0)?;
    let control = SpaceTimeField::constant(&grid, FieldRole::Control, 1.0 - a);
    let source = move |p: [f64; 2], t: f64| exact.source(l, d, a, p[0], t);
    let state = solve_forward_forced(&problem, &control, Some(source), &config.solver)?;
    let last = grid.num_time_steps();
    let t = grid.final_time();
    let sq: f64 = state
        .slice(last)
        .iter()
        .zip(grid.cell_centers())
        .map(|(u, p)| (u - exact.value(l, p[0], t)).powi(2))
        .sum();
    Ok(RefinementLevel {
        h: grid.spacing(),
        dt: grid.dt(),
        error: (sq * grid.cell_volume()).sqrt(),
    })
}

fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

fn check_levels(path: &str, levels: &[usize]) -> Result<()> {
    if levels.len() < 3 {
        return Err(Error::config(
            path,
            "at least 3 refinement levels are required",
        ));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(
            path,
            "refinement levels must increase strictly",
        ));
    }
    Ok(())
}

pub fn mms_convergence(config: &MmsConfig) -> Result<MmsReport> {
    check_levels("mms.temporal_steps", &config.temporal_steps)?;
    check_levels("mms.spatial_cells", &config.spatial_cells)?;
    let temporal = config
        .temporal_steps
        .iter()
        .map(|&n| final_error(config, config.temporal_cells, n, Manufactured::Cosine))
        .collect::<Result<Vec<_>>>()?;
    let spatial = config
        .spatial_cells
        .iter()
        .map(|&m| final_error(config, m, config.spatial_steps, Manufactured::Cosine))
        .collect::<Result<Vec<_>>>()?;
    if let Some(bad) = temporal.iter().chain(&spatial).find(|l| l.error.is_nan() || l.error <= 0.0) {
        return Err(Error::Verification(format!(
            "manufactured-solution error must be positive, got {} at h = {}, dt = {}",
            bad.error, bad.h, bad.dt
        )));
    }
    let fit = |levels: &[RefinementLevel], key: fn(&RefinementLevel) -> f64| {
        let xs: Vec<f64> = levels.iter().map(key).collect();
        let ys: Vec<f64> = levels.iter().map(|l| l.error).collect();
        fitted_slope(&xs, &ys)
    };
    Ok(MmsReport {
        temporal: ConvergenceStudy {
            order: fit(&temporal, |l| l.dt),
            levels: temporal,
        },
        spatial: ConvergenceStudy {
            order: fit(&spatial, |l| l.h),
            levels: spatial,
        },
    })
}

/// Error of a constant manufactured solution `u ≡ value`; the source vanishes
/// when `a·value·(1−value) = 0`.
pub fn constant_solution_error(
    config: &MmsConfig,
    value: f64,
    cells: usize,
    steps: usize,
) -> Result<f64> {
    Ok(final_error(config, cells, steps, Manufactured::Constant(value))?.error)
}
