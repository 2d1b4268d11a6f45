//! Finite-difference checks of the sensitivity, adjoint and gradient.

use serde::{Deserialize, Serialize};

use crate::control::{
    augmented_objective, directional_derivative, gradient_field, sensitivity_weight,
};
use crate::error::{Error, Result};
use crate::field::{
    inner_product, integrate_with, ControlShape, FieldRole, SpaceTimeField, TimeRule,
};
use crate::grid::Grid;
use crate::pde::{solve_adjoint, solve_forward, solve_sensitivity, ForwardProblem, SolverConfig};
use crate::tissue::TissueMap;

pub const SENSITIVITY_TOLERANCE: f64 = 1e-3;
pub const GRADIENT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCheck {
    pub epsilon: f64,
    /// `‖Ψ − (u_{R+ε𝓡} − u_R)/ε‖ / ‖(u_{R+ε𝓡} − u_R)/ε‖` in space-time `L²`.
    pub relative_difference: f64,
    pub pass: bool,
}

fn l2_norm(field: &SpaceTimeField) -> f64 {
    integrate_with(&field.map(|v| v * v), TimeRule::Trapezoid).sqrt()
}

pub fn sensitivity_vs_fd(
    problem: &ForwardProblem,
    control: &SpaceTimeField,
    perturbation: &SpaceTimeField,
    epsilon: f64,
    solver: &SolverConfig,
) -> Result<SensitivityCheck> {
    if !(epsilon > 0.0 && epsilon <= 1e-2) {
        return Err(Error::config(
            "epsilon",
            format!("expected ε in (0, 1e-2], got {epsilon}"),
        ));
    }
    let state = solve_forward(problem, control, solver)?;
    let psi = solve_sensitivity(problem, &state, control, perturbation, solver)?;
    let shifted = solve_forward(problem, &control.add_scaled(epsilon, perturbation)?, solver)?;
    let fd = shifted.zip_map(&state, |a, b| (a - b) / epsilon)?;
    let diff = l2_norm(&psi.zip_map(&fd, |a, b| a - b)?);
    let scale = l2_norm(&fd);
    let relative_difference = if scale > 0.0 { diff / scale } else { diff };
    Ok(SensitivityCheck {
        epsilon,
        relative_difference,
        pass: relative_difference <= SENSITIVITY_TOLERANCE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub epsilon: f64,
    pub finite_difference: f64,
    pub adjoint: f64,
    pub relative_error: f64,
    pub pass: bool,
}

/// Central difference of `J̃` along `direction` against the adjoint gradient.
#[allow(clippy::too_many_arguments)]
pub fn gradient_vs_fd(
    problem: &ForwardProblem,
    control: &SpaceTimeField,
    direction: &SpaceTimeField,
    shape: ControlShape,
    penalty: f64,
    budget: f64,
    epsilon: f64,
    solver: &SolverConfig,
) -> Result<GradientCheck> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::config("epsilon", "ε must be positive"));
    }
    let j = |r: &SpaceTimeField| -> Result<f64> {
        let u = solve_forward(problem, r, solver)?;
        Ok(augmented_objective(&u, r, penalty, budget))
    };
    let plus = j(&control.add_scaled(epsilon, direction)?)?;
    let minus = j(&control.add_scaled(-epsilon, direction)?)?;
    let finite_difference = (plus - minus) / (2.0 * epsilon);

    let state = solve_forward(problem, control, solver)?;
    let phi = solve_adjoint(problem, &state, control, solver)?;
    let grad = gradient_field(&state, &phi, control, penalty, budget, shape)?;
    let adjoint = directional_derivative(&grad, direction, shape)?;
    let relative_error = (finite_difference - adjoint).abs() / finite_difference.abs().max(1e-300);
    Ok(GradientCheck {
        epsilon,
        finite_difference,
        adjoint,
        relative_error,
        pass: relative_error <= GRADIENT_TOLERANCE,
    })
}

/// Relative mismatch in the duality `∫∫Ψ = ∫∫Φ·𝓡·u(u−1)`.
pub fn adjoint_identity(
    problem: &ForwardProblem,
    control: &SpaceTimeField,
    perturbation: &SpaceTimeField,
    solver: &SolverConfig,
) -> Result<f64> {
    let state = solve_forward(problem, control, solver)?;
    let psi = solve_sensitivity(problem, &state, control, perturbation, solver)?;
    let phi = solve_adjoint(problem, &state, control, solver)?;
    let lhs = integrate_with(&psi, TimeRule::StepRight);
    let rhs = inner_product(
        &sensitivity_weight(&state, &phi)?,
        perturbation,
        TimeRule::StepLeft,
    )?;
    Ok((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300))
}

/// Largest `|Φ(·, t_n) − (T − t_n)|` on the stationary case `u ≡ ½`, `R ≡ ρ`,
/// where the adjoint reduces to `Φ_t + ∇·(D∇Φ) = −1`.
pub fn constant_adjoint_error(
    grid: &Grid,
    tissue: &TissueMap,
    proliferation: f64,
    solver: &SolverConfig,
) -> Result<f64> {
    let problem = ForwardProblem::new(
        *grid,
        tissue.clone(),
        proliferation,
        vec![0.5; grid.num_cells()],
    )?;
    let control = SpaceTimeField::constant(grid, FieldRole::Control, proliferation);
    let state = solve_forward(&problem, &control, solver)?;
    let phi = solve_adjoint(&problem, &state, &control, solver)?;
    let mut worst = 0.0f64;
    for n in 0..grid.num_time_nodes() {
        let exact = grid.final_time() - grid.time(n);
        for v in phi.slice(n) {
            worst = worst.max((v - exact).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridConfig};
    use crate::tissue::{build_tissue_map, RegionSpec};

    fn problem() -> ForwardProblem {
        let g = build_grid(&GridConfig {
            lengths: vec![5.0],
            cells: vec![32],
            num_time_steps: 40,
            final_time: 0.5,
        })
        .unwrap();
        let t =
            build_tissue_map(&g, &RegionSpec::Intervals(vec![[0.75, 1.75]]), 1.0, 0.001).unwrap();
        let u0 = g
            .cell_centers()
            .iter()
            .map(|p| (-8.0 * (p[0] - 2.5).powi(2)).exp())
            .collect();
        ForwardProblem::new(g, t, 1.0, u0).unwrap()
    }

    #[test]
    fn zero_perturbation_gives_zero_difference() {
        let p = problem();
        let r = SpaceTimeField::constant(p.grid(), FieldRole::Control, 0.3);
        let z = SpaceTimeField::zeros(p.grid(), FieldRole::Control);
        let c = sensitivity_vs_fd(&p, &r, &z, 1e-4, &SolverConfig::default()).unwrap();
        assert_eq!(c.relative_difference, 0.0);
        assert!(c.pass);
    }

    #[test]
    fn epsilon_range_enforced() {
        let p = problem();
        let r = SpaceTimeField::constant(p.grid(), FieldRole::Control, 0.3);
        let s = SolverConfig::default();
        assert!(sensitivity_vs_fd(&p, &r, &r, 0.0, &s).is_err());
        assert!(sensitivity_vs_fd(&p, &r, &r, 0.1, &s).is_err());
    }

    #[test]
    fn duality_holds_to_rounding() {
        let p = problem();
        let r = SpaceTimeField::from_fn(p.grid(), FieldRole::Control, |c, n| {
            0.5 + 0.4 * ((c * 3 + n) as f64 * 0.7).sin()
        });
        let d = SpaceTimeField::from_fn(p.grid(), FieldRole::Control, |c, n| {
            ((c + 2 * n) as f64 * 1.3).cos()
        });
        let e = adjoint_identity(&p, &r, &d, &SolverConfig::default()).unwrap();
        assert!(e < 1e-10, "{e}");
    }
}
