//! Space-time fields, quadrature and the control specification.
//!
//! Values are stored node-major: all cells of time node 0, then node 1, and
//! so on, so that a time slice is one contiguous slice.
//!
//! Controls are piecewise constant in time: the value stored at node `n`
//! acts on `[t_n, t_{n+1})`. The value stored at the final node `t_N = T`
//! carries no weight in the step-wise rules and is kept equal to the last
//! step's value by the routines that produce controls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRole {
    State,
    Control,
    Adjoint,
    Sensitivity,
    Gradient,
}

impl FieldRole {
    pub fn name(self) -> &'static str {
        match self {
            FieldRole::State => "state",
            FieldRole::Control => "control",
            FieldRole::Adjoint => "adjoint",
            FieldRole::Sensitivity => "sensitivity",
            FieldRole::Gradient => "gradient",
        }
    }
}

/// Time quadrature applied on top of the cell-sum in space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeRule {
    /// Trapezoid over all nodes. Exact for fields linear in time.
    Trapezoid,
    /// `Σ_{n<N} dt·f_n`: exact for step-wise controls (left-node convention).
    StepLeft,
    /// `Σ_{n≥1} dt·f_n`: the implicit-node rule matching backward Euler.
    StepRight,
}

impl TimeRule {
    /// Weight of time node `n` on `grid`.
    pub fn weight(self, grid: &Grid, n: usize) -> f64 {
        let last = grid.num_time_steps();
        let dt = grid.dt();
        match self {
            TimeRule::Trapezoid if n == 0 || n == last => 0.5 * dt,
            TimeRule::Trapezoid => dt,
            TimeRule::StepLeft if n == last => 0.0,
            TimeRule::StepLeft => dt,
            TimeRule::StepRight if n == 0 => 0.0,
            TimeRule::StepRight => dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    role: FieldRole,
    grid: Grid,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: &Grid, role: FieldRole) -> Self {
        Self::constant(grid, role, 0.0)
    }

    pub fn constant(grid: &Grid, role: FieldRole, value: f64) -> Self {
        SpaceTimeField {
            role,
            grid: *grid,
            values: vec![value; grid.num_cells() * grid.num_time_nodes()],
        }
    }

    /// Build from a function of (cell index, time node).
    pub fn from_fn(grid: &Grid, role: FieldRole, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let cells = grid.num_cells();
        let mut values = Vec::with_capacity(cells * grid.num_time_nodes());
        for n in 0..grid.num_time_nodes() {
            for c in 0..cells {
                values.push(f(c, n));
            }
        }
        SpaceTimeField {
            role,
            grid: *grid,
            values,
        }
    }

    pub fn from_values(grid: &Grid, role: FieldRole, values: Vec<f64>) -> Result<Self> {
        let expected = grid.num_cells() * grid.num_time_nodes();
        if values.len() != expected {
            return Err(Error::Shape(format!(
                "{} field needs {expected} values (cells × time nodes), got {}",
                role.name(),
                values.len()
            )));
        }
        Ok(SpaceTimeField {
            role,
            grid: *grid,
            values,
        })
    }

    pub fn role(&self) -> FieldRole {
        self.role
    }

    pub fn with_role(mut self, role: FieldRole) -> Self {
        self.role = role;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn num_cells(&self) -> usize {
        self.grid.num_cells()
    }

    pub fn num_time_nodes(&self) -> usize {
        self.grid.num_time_nodes()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, cell: usize, node: usize) -> f64 {
        self.values[node * self.num_cells() + cell]
    }

    pub fn set(&mut self, cell: usize, node: usize, value: f64) {
        let cells = self.num_cells();
        self.values[node * cells + cell] = value;
    }

    pub fn slice(&self, node: usize) -> &[f64] {
        let cells = self.num_cells();
        &self.values[node * cells..(node + 1) * cells]
    }

    pub fn slice_mut(&mut self, node: usize) -> &mut [f64] {
        let cells = self.num_cells();
        &mut self.values[node * cells..(node + 1) * cells]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn same_layout(&self, other: &SpaceTimeField) -> bool {
        self.grid.compatible(&other.grid)
    }

    pub(crate) fn check_layout(&self, other: &SpaceTimeField) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{} and {} fields live on different grids",
                self.role.name(),
                other.role.name()
            )))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SpaceTimeField {
        SpaceTimeField {
            role: self.role,
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Entry-wise combination of two fields on the same grid.
    pub fn zip_map(
        &self,
        other: &SpaceTimeField,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<SpaceTimeField> {
        self.check_layout(other)?;
        Ok(SpaceTimeField {
            role: self.role,
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `self + alpha·other`
    pub fn add_scaled(&self, alpha: f64, other: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.zip_map(other, |a, b| a + alpha * b)
    }

    /// `∫_Ω f(·, t_n) dx` by the cell sum.
    pub fn spatial_integral(&self, node: usize) -> f64 {
        self.grid.cell_volume() * self.slice(node).iter().sum::<f64>()
    }

    /// Copy the last step's values onto the final node (step-wise controls).
    pub fn mirror_final_node(&mut self) {
        let cells = self.num_cells();
        let last = self.grid.num_time_steps();
        let (head, tail) = self.values.split_at_mut(last * cells);
        tail.copy_from_slice(&head[(last - 1) * cells..]);
    }

    /// True when every time slice is constant across cells.
    pub fn is_uniform_in_space(&self) -> bool {
        (0..self.num_time_nodes()).all(|n| {
            let s = self.slice(n);
            s.iter().all(|&v| v == s[0])
        })
    }
}

/// `∫₀ᵀ∫_Ω f dx dt` with the cell sum in space and the trapezoid in time.
pub fn integrate(field: &SpaceTimeField) -> f64 {
    integrate_with(field, TimeRule::Trapezoid)
}

pub fn integrate_with(field: &SpaceTimeField, rule: TimeRule) -> f64 {
    let grid = field.grid();
    (0..grid.num_time_nodes())
        .map(|n| {
            let w = rule.weight(grid, n);
            if w == 0.0 {
                0.0
            } else {
                w * field.spatial_integral(n)
            }
        })
        .sum()
}

/// `∫∫ f·g` under `rule`, without allocating the product field.
pub fn inner_product(a: &SpaceTimeField, b: &SpaceTimeField, rule: TimeRule) -> Result<f64> {
    a.check_layout(b)?;
    let grid = a.grid();
    let vol = grid.cell_volume();
    Ok((0..grid.num_time_nodes())
        .map(|n| {
            let w = rule.weight(grid, n);
            if w == 0.0 {
                return 0.0;
            }
            let s: f64 = a.slice(n).iter().zip(b.slice(n)).map(|(x, y)| x * y).sum();
            w * vol * s
        })
        .sum())
}

pub fn clamp_field(field: &SpaceTimeField, lo: f64, hi: f64) -> Result<SpaceTimeField> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::config(
            "clamp",
            format!("lower bound {lo} exceeds upper bound {hi}"),
        ));
    }
    Ok(field.map(|v| v.clamp(lo, hi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlShape {
    /// `R = R(t)`, one value per time node broadcast over cells.
    UniformInSpace,
    /// `R = R(x, t)`.
    Distributed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    pub shape: ControlShape,
    /// Dose-rate ceiling `M`.
    pub upper_bound: f64,
    /// Total dose `Γ`.
    pub budget: f64,
    /// Penalty weight `λ` on the budget residual.
    pub penalty: f64,
    /// Net proliferation rate `ρ`.
    pub proliferation: f64,
}

impl ControlSpec {
    /// Checks `M > 0`, `λ ≥ 0`, `ρ > 0` and `0 < Γ/M ≤ |Ω|·T`.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.upper_bound.is_finite() && self.upper_bound > 0.0) {
            return Err(Error::config(
                "control.upper_bound",
                format!("M must be positive, got {}", self.upper_bound),
            ));
        }
        if !(self.penalty.is_finite() && self.penalty >= 0.0) {
            return Err(Error::config(
                "control.penalty",
                format!("λ must be non-negative, got {}", self.penalty),
            ));
        }
        if !(self.proliferation.is_finite() && self.proliferation > 0.0) {
            return Err(Error::config(
                "control.proliferation",
                format!("ρ must be positive, got {}", self.proliferation),
            ));
        }
        let ratio = self.budget / self.upper_bound;
        let bound = grid.domain_measure() * grid.final_time();
        // relative slack so that Γ = M·|Ω|T computed in floating point is accepted
        if !(ratio.is_finite() && ratio > 0.0 && ratio <= bound * (1.0 + 1e-12)) {
            return Err(Error::Infeasible { ratio, bound });
        }
        Ok(())
    }

    /// The spatially and temporally uniform control meeting the budget exactly.
    pub fn constant_feasible(&self, grid: &Grid) -> f64 {
        self.budget / (grid.domain_measure() * grid.final_time())
    }
}

/// Budget functional `∫∫R` for step-wise controls.
pub fn control_budget(control: &SpaceTimeField) -> f64 {
    integrate_with(control, TimeRule::StepLeft)
}
