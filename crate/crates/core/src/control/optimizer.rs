//! Projected gradient descent on the budget-penalized objective with an
//! accept/reject step-size rule: a candidate is kept only if `J̃` drops, in
//! which case the step doubles; otherwise the step halves.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::control::bathtub::bathtub_reconstruct;
use crate::control::objective::{
    augmented_objective, gradient_field, sensitivity_weight, shape_weight,
};
use crate::error::{Error, Result};
use crate::field::{clamp_field, control_budget, ControlShape, ControlSpec, SpaceTimeField};
use crate::pde::{solve_adjoint, solve_forward, ForwardProblem, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub initial_step: f64,
    pub max_iterations: usize,
    pub step_growth: f64,
    pub step_shrink: f64,
    /// Stop once `|J̃_{k−w} − J̃_k| / |J̃_k|` falls below this over the last
    /// `stop_window` accepted iterates. Zero disables the test.
    pub stop_tolerance: f64,
    pub stop_window: usize,
    /// Compare the final iterate with the bathtub control built from its `g`.
    pub polish: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            initial_step: 1.0,
            max_iterations: 200,
            step_growth: 2.0,
            step_shrink: 0.5,
            stop_tolerance: 1e-6,
            stop_window: 10,
            polish: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_step.is_finite() && self.initial_step > 0.0) {
            return Err(Error::config(
                "optimizer.initial_step",
                "Δ₀ must be positive",
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::config(
                "optimizer.max_iterations",
                "n must be at least 1",
            ));
        }
        if !(self.step_growth.is_finite() && self.step_growth > 1.0) {
            return Err(Error::config(
                "optimizer.step_growth",
                "growth factor must exceed 1",
            ));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(Error::config(
                "optimizer.step_shrink",
                "shrink factor must lie in (0, 1)",
            ));
        }
        if !(self.stop_tolerance.is_finite() && self.stop_tolerance >= 0.0) {
            return Err(Error::config(
                "optimizer.stop_tolerance",
                "tolerance must be non-negative",
            ));
        }
        if self.stop_window == 0 {
            return Err(Error::config(
                "optimizer.stop_window",
                "window must be at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIterations,
    Converged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolishReport {
    pub gradient_objective: f64,
    pub bathtub_objective: f64,
    pub bathtub_better: bool,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub control: SpaceTimeField,
    pub state: SpaceTimeField,
    /// `J̃` of the initial guess followed by every accepted iterate.
    pub objective_history: Vec<f64>,
    /// Iteration index at which each accepted iterate was found (0 = initial).
    pub accepted_at: Vec<usize>,
    pub iterations: usize,
    pub final_step: f64,
    pub stop_reason: StopReason,
    /// `∫∫R* − Γ`
    pub constraint_residual: f64,
    pub bang_bang_fraction: f64,
    pub polish: Option<PolishReport>,
    pub wall_time_seconds: f64,
}

impl OptimizationResult {
    pub fn accepted_steps(&self) -> usize {
        self.objective_history.len() - 1
    }
}

/// Share of step values within `tolerance` of `0` or `M`.
pub fn bang_bang_fraction(control: &SpaceTimeField, upper_bound: f64, tolerance: f64) -> f64 {
    let grid = control.grid();
    let atoms = grid.num_cells() * grid.num_time_steps();
    let hits = control.values()[..atoms]
        .iter()
        .filter(|&&v| v <= tolerance || v >= upper_bound - tolerance)
        .count();
    hits as f64 / atoms as f64
}

/// Relative width used by [`OptimizationResult::bang_bang_fraction`].
pub const BANG_BANG_TOLERANCE: f64 = 1e-2;

fn with_iteration(iteration: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Solver(source) => Error::Optimizer { iteration, source },
        other => other,
    }
}

pub fn optimize(
    problem: &ForwardProblem,
    initial_control: &SpaceTimeField,
    spec: &ControlSpec,
    config: &OptimizerConfig,
    solver: &SolverConfig,
) -> Result<OptimizationResult> {
    let started = Instant::now();
    let grid = *problem.grid();
    spec.validate(&grid)?;
    config.validate()?;
    solver.validate()?;
    problem.check_field(initial_control)?;
    let upper = spec.upper_bound;
    if initial_control.min() < 0.0 || initial_control.max() > upper {
        return Err(Error::config(
            "initial_control",
            format!("initial guess must lie in [0, {upper}]"),
        ));
    }
    if spec.shape == ControlShape::UniformInSpace && !initial_control.is_uniform_in_space() {
        return Err(Error::Shape(
            "initial control varies in space but the control shape is uniform_in_space".into(),
        ));
    }

    let mut control = initial_control.clone();
    control.mirror_final_node();
    let mut state = solve_forward(problem, &control, solver).map_err(with_iteration(0))?;
    let mut current = augmented_objective(&state, &control, spec.penalty, spec.budget);
    let mut history = vec![current];
    let mut accepted_at = vec![0];
    let mut step = config.initial_step;
    let mut stop_reason = StopReason::MaxIterations;
    let mut direction: Option<SpaceTimeField> = None;
    let mut iterations = 0;

    for k in 1..=config.max_iterations {
        iterations = k;
        // Φ only changes when the iterate does
        if direction.is_none() {
            let adjoint =
                solve_adjoint(problem, &state, &control, solver).map_err(with_iteration(k))?;
            direction = Some(gradient_field(
                &state,
                &adjoint,
                &control,
                spec.penalty,
                spec.budget,
                spec.shape,
            )?);
        }
        let d = direction.as_ref().expect("computed above");
        let mut candidate = clamp_field(&control.add_scaled(step, d)?, 0.0, upper)?;
        candidate.mirror_final_node();
        let candidate_state =
            solve_forward(problem, &candidate, solver).map_err(with_iteration(k))?;
        let value = augmented_objective(&candidate_state, &candidate, spec.penalty, spec.budget);

        if value < current {
            control = candidate;
            state = candidate_state;
            current = value;
            history.push(value);
            accepted_at.push(k);
            step *= config.step_growth;
            direction = None;

            let w = config.stop_window;
            if config.stop_tolerance > 0.0 && history.len() > w {
                let past = history[history.len() - 1 - w];
                let change = (past - current).abs() / current.abs().max(f64::MIN_POSITIVE);
                if change < config.stop_tolerance {
                    stop_reason = StopReason::Converged;
                    break;
                }
            }
        } else {
            step *= config.step_shrink;
        }
    }

    let polish = if config.polish {
        let adjoint =
            solve_adjoint(problem, &state, &control, solver).map_err(with_iteration(iterations))?;
        let g = shape_weight(&sensitivity_weight(&state, &adjoint)?, spec.shape);
        let bathtub = bathtub_reconstruct(&g, spec.budget, upper)?;
        let bathtub_state =
            solve_forward(problem, &bathtub.control, solver).map_err(with_iteration(iterations))?;
        let bathtub_objective =
            augmented_objective(&bathtub_state, &bathtub.control, spec.penalty, spec.budget);
        Some(PolishReport {
            gradient_objective: current,
            bathtub_objective,
            bathtub_better: bathtub_objective < current,
        })
    } else {
        None
    };

    Ok(OptimizationResult {
        constraint_residual: control_budget(&control) - spec.budget,
        bang_bang_fraction: bang_bang_fraction(&control, upper, BANG_BANG_TOLERANCE * upper),
        control,
        state,
        objective_history: history,
        accepted_at,
        iterations,
        final_step: step,
        stop_reason,
        polish,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    })
}
