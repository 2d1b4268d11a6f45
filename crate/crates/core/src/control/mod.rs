//! Objective, gradient, projected gradient descent and the bathtub
//! characterization of optimal doses.

pub mod bathtub;
pub mod necessary;
pub mod objective;
pub mod optimizer;

pub use bathtub::{bathtub_atoms, bathtub_reconstruct, BathtubLevel, BathtubResult};
pub use necessary::{necessary_condition_check, random_feasible_control, NecessaryConditionReport};
pub use objective::{
    augmented_objective, directional_derivative, gradient_field, objective, sensitivity_weight,
    shape_weight,
};
pub use optimizer::{
    bang_bang_fraction, optimize, OptimizationResult, OptimizerConfig, PolishReport, StopReason,
};
