//! Closed-form solution of the spatially uniform reduction `u' = a·u(1−u)`.

use crate::error::Result;
use crate::field::{FieldRole, SpaceTimeField};
use crate::grid::{build_grid, GridConfig};
use crate::pde::{solve_forward, ForwardProblem, SolverConfig};
use crate::tissue::TissueMap;

pub fn logistic_exact(u0: f64, rate: f64, t: f64) -> f64 {
    let growth = (rate * t).exp();
    u0 * growth / (1.0 - u0 + u0 * growth)
}

/// Worst relative error at `T` of the forward solver against
/// [`logistic_exact`] for spatially uniform data (`ρ = 1`, `R = 1 − a`).
pub fn logistic_oracle_error(
    u0: f64,
    rate: f64,
    final_time: f64,
    steps: usize,
    solver: &SolverConfig,
) -> Result<f64> {
    let grid = build_grid(&GridConfig {
        lengths: vec![1.0],
        cells: vec![8],
        num_time_steps: steps,
        final_time,
    })?;
    let tissue = TissueMap::homogeneous(&grid, 1.0)?;
    let problem = ForwardProblem::new(grid, tissue, 1.0, vec![u0; grid.num_cells()])?;
    let control = SpaceTimeField::constant(&grid, FieldRole::Control, 1.0 - rate);
    let state = solve_forward(&problem, &control, solver)?;
    let exact = logistic_exact(u0, rate, final_time);
    Ok(state
        .slice(steps)
        .iter()
        .map(|u| (u - exact).abs() / exact.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max))
}
