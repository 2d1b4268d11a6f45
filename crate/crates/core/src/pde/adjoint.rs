//! Linear problems attached to a forward trajectory: the adjoint `Φ` and the
//! sensitivity `Ψ`.
//!
//! Both are advanced with backward Euler on the same partition as the state.
//! On the step `[t_n, t_{n+1}]` the coefficient `a(1−2u)` uses the control
//! `R_n` acting on that step and the state `u_{n+1}` at its implicit node.
//! With this sampling the adjoint recursion is exactly the transpose of the
//! linearized forward scheme, so `∫∫Ψ` (implicit-node rule) equals
//! `∫∫Φ·𝓡·u(u−1)` (step rule) up to solver precision.

use crate::error::Result;
use crate::field::{FieldRole, SpaceTimeField};
use crate::pde::forward::{ForwardProblem, SolverConfig};
use crate::pde::linsolve::ShiftedSystem;

fn linearized_shift(
    problem: &ForwardProblem,
    state: &SpaceTimeField,
    control: &SpaceTimeField,
    step: usize,
    out: &mut [f64],
) {
    let dt = problem.grid().dt();
    let rho = problem.proliferation();
    for ((s, &r), &u) in out
        .iter_mut()
        .zip(control.slice(step))
        .zip(state.slice(step + 1))
    {
        *s = -dt * (rho - r) * (1.0 - 2.0 * u);
    }
}

/// Solves `Φ_t + ∇·(D∇Φ) + (ρ−R)(1−2u)Φ = −1`, `Φ(T) = 0`.
///
/// Stepping is done on `Θ(τ) = Φ(T−τ)`, which solves the forward-in-time
/// problem `Θ_τ − ∇·(D∇Θ) − bΘ = 1`, `Θ(0) = 0`.
pub fn solve_adjoint(
    problem: &ForwardProblem,
    state: &SpaceTimeField,
    control: &SpaceTimeField,
    config: &SolverConfig,
) -> Result<SpaceTimeField> {
    config.validate()?;
    problem.check_field(state)?;
    problem.check_field(control)?;
    let grid = problem.grid();
    let steps = grid.num_time_steps();
    let cells = grid.num_cells();
    let dt = grid.dt();

    // theta[m] = Φ at node N − m
    let mut theta = vec![vec![0.0; cells]];
    let mut shift = vec![0.0; cells];
    let mut rhs = vec![0.0; cells];
    for m in 0..steps {
        let step = steps - 1 - m;
        linearized_shift(problem, state, control, step, &mut shift);
        for (r, &t) in rhs.iter_mut().zip(&theta[m]) {
            *r = t + dt;
        }
        let system = ShiftedSystem {
            operator: problem.operator(),
            scale: dt,
            shift: &shift,
        };
        let next = system
            .solve(&rhs, config.linear_solver_tolerance)
            .map_err(|e| e.at_time(step))?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(crate::error::SolverError::NonFinite { time_index: step }.into());
        }
        theta.push(next);
    }

    let mut adjoint = SpaceTimeField::zeros(grid, FieldRole::Adjoint);
    for (m, slice) in theta.iter().enumerate() {
        adjoint.slice_mut(steps - m).copy_from_slice(slice);
    }
    Ok(adjoint)
}

/// Solves the linearized state equation
/// `Ψ_t − ∇·(D∇Ψ) − (ρ−R)(1−2u)Ψ = −𝓡·u(1−u)`, `Ψ(0) = 0`.
pub fn solve_sensitivity(
    problem: &ForwardProblem,
    state: &SpaceTimeField,
    control: &SpaceTimeField,
    perturbation: &SpaceTimeField,
    config: &SolverConfig,
) -> Result<SpaceTimeField> {
    config.validate()?;
    problem.check_field(state)?;
    problem.check_field(control)?;
    problem.check_field(perturbation)?;
    let grid = problem.grid();
    let cells = grid.num_cells();
    let dt = grid.dt();

    let mut psi = SpaceTimeField::zeros(grid, FieldRole::Sensitivity);
    let mut shift = vec![0.0; cells];
    let mut rhs = vec![0.0; cells];
    for n in 0..grid.num_time_steps() {
        linearized_shift(problem, state, control, n, &mut shift);
        let u_next = state.slice(n + 1);
        let pert = perturbation.slice(n);
        for c in 0..cells {
            rhs[c] = psi.get(c, n) - dt * pert[c] * u_next[c] * (1.0 - u_next[c]);
        }
        let system = ShiftedSystem {
            operator: problem.operator(),
            scale: dt,
            shift: &shift,
        };
        let next = system
            .solve(&rhs, config.linear_solver_tolerance)
            .map_err(|e| e.at_time(n + 1))?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(crate::error::SolverError::NonFinite { time_index: n + 1 }.into());
        }
        psi.slice_mut(n + 1).copy_from_slice(&next);
    }
    Ok(psi)
}
