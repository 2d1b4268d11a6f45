//! Time stepping for the state, adjoint and sensitivity equations.

pub mod adjoint;
pub mod forward;
pub mod linsolve;
pub mod operator;

pub use adjoint::{solve_adjoint, solve_sensitivity};
pub use forward::{
    solve_forward, solve_forward_forced, step_forward, ForwardProblem, SolverConfig,
};
pub use operator::{assemble_diffusion, face_diffusivity, DiffusionOperator};
