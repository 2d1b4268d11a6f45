//! Backward Euler with Newton for `u_t − ∇·(D∇u) = (ρ − R)·u(1−u)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SolverError};
use crate::field::{FieldRole, SpaceTimeField};
use crate::grid::Grid;
use crate::pde::linsolve::ShiftedSystem;
use crate::pde::operator::{assemble_diffusion, DiffusionOperator};
use crate::tissue::TissueMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Sup-norm of the nonlinear residual at which Newton stops.
    pub newton_tolerance: f64,
    pub newton_max_iterations: usize,
    /// Relative residual for the iterative (2D) linear solver.
    pub linear_solver_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tolerance: 1e-10,
            newton_max_iterations: 50,
            linear_solver_tolerance: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tolerance.is_finite() && self.newton_tolerance > 0.0) {
            return Err(Error::config(
                "solver.newton_tolerance",
                "tolerance must be positive",
            ));
        }
        if self.newton_max_iterations == 0 {
            return Err(Error::config(
                "solver.newton_max_iterations",
                "at least one iteration is required",
            ));
        }
        if !(self.linear_solver_tolerance.is_finite() && self.linear_solver_tolerance > 0.0) {
            return Err(Error::config(
                "solver.linear_solver_tolerance",
                "tolerance must be positive",
            ));
        }
        Ok(())
    }
}

/// Everything about the state equation except the control.
#[derive(Debug, Clone)]
pub struct ForwardProblem {
    grid: Grid,
    tissue: TissueMap,
    operator: DiffusionOperator,
    proliferation: f64,
    initial_state: Vec<f64>,
}

impl ForwardProblem {
    pub fn new(
        grid: Grid,
        tissue: TissueMap,
        proliferation: f64,
        initial_state: Vec<f64>,
    ) -> Result<Self> {
        if tissue.num_cells() != grid.num_cells() {
            return Err(Error::Shape(format!(
                "tissue map has {} cells, grid has {}",
                tissue.num_cells(),
                grid.num_cells()
            )));
        }
        if initial_state.len() != grid.num_cells() {
            return Err(Error::Shape(format!(
                "initial state has {} values, grid has {} cells",
                initial_state.len(),
                grid.num_cells()
            )));
        }
        if let Some(c) = initial_state.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(
                format!("initial_state[{c}]"),
                "initial state must be finite",
            ));
        }
        if !(proliferation.is_finite() && proliferation > 0.0) {
            return Err(Error::config("control.proliferation", "ρ must be positive"));
        }
        let operator = assemble_diffusion(&grid, &tissue);
        Ok(ForwardProblem {
            grid,
            tissue,
            operator,
            proliferation,
            initial_state,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn tissue(&self) -> &TissueMap {
        &self.tissue
    }

    pub fn operator(&self) -> &DiffusionOperator {
        &self.operator
    }

    pub fn proliferation(&self) -> f64 {
        self.proliferation
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.initial_state
    }

    pub(crate) fn check_field(&self, field: &SpaceTimeField) -> Result<()> {
        if !field.grid().compatible(&self.grid) {
            return Err(Error::Shape(format!(
                "{} field does not live on the problem grid",
                field.role().name()
            )));
        }
        if !field.is_finite() {
            return Err(Error::config(
                field.role().name(),
                "field contains non-finite entries",
            ));
        }
        Ok(())
    }
}

/// One implicit step with per-cell reaction coefficient `a = ρ − R_n`.
pub fn step_forward(
    u_prev: &[f64],
    control: &[f64],
    dt: f64,
    operator: &DiffusionOperator,
    proliferation: f64,
    config: &SolverConfig,
) -> Result<Vec<f64>, SolverError> {
    let reaction: Vec<f64> = control.iter().map(|r| proliferation - r).collect();
    newton_step(u_prev, &reaction, None, dt, operator, config)
}

/// Solves `v − u_prev + dt·A·v − dt·a∘v(1−v) − dt·s = 0` for `v`.
pub(crate) fn newton_step(
    u_prev: &[f64],
    reaction: &[f64],
    source: Option<&[f64]>,
    dt: f64,
    operator: &DiffusionOperator,
    config: &SolverConfig,
) -> Result<Vec<f64>, SolverError> {
    let n = u_prev.len();
    let mut v = u_prev.to_vec();
    let mut av = vec![0.0; n];
    let mut residual = vec![0.0; n];
    let mut shift = vec![0.0; n];
    let mut norm = f64::INFINITY;

    for iteration in 0..=config.newton_max_iterations {
        operator.apply(&v, &mut av);
        norm = 0.0;
        for i in 0..n {
            let mut r = v[i] - u_prev[i] + dt * av[i] - dt * reaction[i] * v[i] * (1.0 - v[i]);
            if let Some(s) = source {
                r -= dt * s[i];
            }
            residual[i] = -r;
            norm = f64::max(norm, r.abs());
        }
        if !norm.is_finite() {
            return Err(SolverError::NonFinite { time_index: 0 });
        }
        if norm <= config.newton_tolerance {
            return Ok(v);
        }
        if iteration == config.newton_max_iterations {
            break;
        }
        for i in 0..n {
            shift[i] = -dt * reaction[i] * (1.0 - 2.0 * v[i]);
        }
        let system = ShiftedSystem {
            operator,
            scale: dt,
            shift: &shift,
        };
        let delta = system.solve(&residual, config.linear_solver_tolerance)?;
        for (vi, d) in v.iter_mut().zip(&delta) {
            *vi += d;
        }
    }
    Err(SolverError::NewtonDiverged {
        time_index: 0,
        iterations: config.newton_max_iterations,
        residual: norm,
    })
}

pub fn solve_forward(
    problem: &ForwardProblem,
    control: &SpaceTimeField,
    config: &SolverConfig,
) -> Result<SpaceTimeField> {
    solve_forward_forced(problem, control, None::<fn([f64; 2], f64) -> f64>, config)
}

/// Forward solve with an optional volume source `s(x, t)` evaluated at the
/// implicit time node. Used by manufactured-solution studies.
pub fn solve_forward_forced<F>(
    problem: &ForwardProblem,
    control: &SpaceTimeField,
    source: Option<F>,
    config: &SolverConfig,
) -> Result<SpaceTimeField>
where
    F: Fn([f64; 2], f64) -> f64,
{
    config.validate()?;
    problem.check_field(control)?;
    let grid = problem.grid();
    let dt = grid.dt();
    let centers = grid.cell_centers();
    let mut state = SpaceTimeField::zeros(grid, FieldRole::State);
    state.slice_mut(0).copy_from_slice(problem.initial_state());

    let mut reaction = vec![0.0; grid.num_cells()];
    let mut src = vec![0.0; grid.num_cells()];
    for n in 0..grid.num_time_steps() {
        for (a, r) in reaction.iter_mut().zip(control.slice(n)) {
            *a = problem.proliferation() - r;
        }
        let src_ref = match &source {
            Some(f) => {
                let t = grid.time(n + 1);
                for (s, &x) in src.iter_mut().zip(&centers) {
                    *s = f(x, t);
                }
                Some(src.as_slice())
            }
            None => None,
        };
        let next = newton_step(
            state.slice(n),
            &reaction,
            src_ref,
            dt,
            problem.operator(),
            config,
        )
        .map_err(|e| e.at_time(n + 1))?;
        state.slice_mut(n + 1).copy_from_slice(&next);
    }
    Ok(state)
}
