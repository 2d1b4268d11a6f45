//! Tumor burden, the budget-penalized objective and its gradient.

use crate::error::{Error, Result};
use crate::field::{
    control_budget, inner_product, integrate_with, ControlShape, FieldRole, SpaceTimeField,
    TimeRule,
};

/// `J = ∫∫u`, with the implicit-node time rule that matches backward Euler.
pub fn objective(state: &SpaceTimeField) -> f64 {
    integrate_with(state, TimeRule::StepRight)
}

/// `J̃ = J + (λ/2)(∫∫R − Γ)²`.
pub fn augmented_objective(
    state: &SpaceTimeField,
    control: &SpaceTimeField,
    penalty: f64,
    budget: f64,
) -> f64 {
    let residual = control_budget(control) - budget;
    objective(state) + 0.5 * penalty * residual * residual
}

/// `g = Φ·u(u−1)` on each step: the pointwise derivative of `J` with respect
/// to the step's control value. The final node mirrors the last step.
pub fn sensitivity_weight(
    state: &SpaceTimeField,
    adjoint: &SpaceTimeField,
) -> Result<SpaceTimeField> {
    state.check_layout(adjoint)?;
    let grid = *state.grid();
    let steps = grid.num_time_steps();
    let mut g = SpaceTimeField::zeros(&grid, FieldRole::Gradient);
    for n in 0..steps {
        let u = state.slice(n + 1);
        let phi = adjoint.slice(n);
        for (c, out) in g.slice_mut(n).iter_mut().enumerate() {
            *out = phi[c] * u[c] * (u[c] - 1.0);
        }
    }
    g.mirror_final_node();
    Ok(g)
}

/// The weight a control of `shape` actually sees: `g` itself for distributed
/// controls, its spatial mean per node (bit-identical across cells) for
/// spatially uniform ones.
pub fn shape_weight(g: &SpaceTimeField, shape: ControlShape) -> SpaceTimeField {
    match shape {
        ControlShape::Distributed => g.clone(),
        ControlShape::UniformInSpace => {
            let area = g.grid().domain_measure();
            let mut out = g.clone();
            for n in 0..g.num_time_nodes() {
                let mean = g.spatial_integral(n) / area;
                out.slice_mut(n).fill(mean);
            }
            out
        }
    }
}

/// Descent direction of `J̃` (already negated), so the update is `R + Δ·direction`.
///
/// Distributed controls get `Φ·u(1−u) − λ(∫∫R − Γ)` per entry. Spatially
/// uniform controls get `∫_Ω Φ·u(1−u) dx − λ|Ω|(∫∫R − Γ)` per time step,
/// broadcast over cells; this is the gradient for the `L²(0,T)` pairing
/// used by [`directional_derivative`].
pub fn gradient_field(
    state: &SpaceTimeField,
    adjoint: &SpaceTimeField,
    control: &SpaceTimeField,
    penalty: f64,
    budget: f64,
    shape: ControlShape,
) -> Result<SpaceTimeField> {
    state.check_layout(control)?;
    let mut direction = sensitivity_weight(state, adjoint)?.map(|g| -g);
    let residual = control_budget(control) - budget;
    let grid = *state.grid();
    match shape {
        ControlShape::Distributed => {
            for v in direction.values_mut() {
                *v -= penalty * residual;
            }
        }
        ControlShape::UniformInSpace => {
            if !control.is_uniform_in_space() {
                return Err(Error::Shape(
                    "control varies in space but the control shape is uniform_in_space".into(),
                ));
            }
            let area = grid.domain_measure();
            for n in 0..grid.num_time_nodes() {
                let value = direction.spatial_integral(n) - penalty * area * residual;
                direction.slice_mut(n).fill(value);
            }
        }
    }
    Ok(direction)
}

/// First-order change of `J̃` along `perturbation`, given the output of
/// [`gradient_field`].
pub fn directional_derivative(
    direction: &SpaceTimeField,
    perturbation: &SpaceTimeField,
    shape: ControlShape,
) -> Result<f64> {
    let pairing = inner_product(direction, perturbation, TimeRule::StepLeft)?;
    Ok(match shape {
        ControlShape::Distributed => -pairing,
        ControlShape::UniformInSpace => -pairing / direction.grid().domain_measure(),
    })
}
