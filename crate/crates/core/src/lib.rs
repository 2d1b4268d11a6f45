//! Optimal radiotherapy scheduling for a reaction-diffusion glioma model.
//!
//! The tumor cell density `u` obeys
//!
//! ```text
//! u_t − ∇·(D(x)∇u) = (ρ − R(x,t))·u(1−u)   in Ω × (0,T)
//! ∇u·n = 0 on ∂Ω,   u(·,0) = u₀
//! ```
//!
//! where `D` is larger in white matter than in grey matter and `R` is the
//! radiation-induced loss rate. The crate provides the forward, adjoint and
//! sensitivity solvers, the tumor-burden objective and its gradient,
//! projected gradient descent over `0 ≤ R ≤ M` with a budget penalty, the
//! bathtub-principle reconstruction of bang-bang controls, and a suite of
//! invariant checks.

pub mod control;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod pde;
pub mod tissue;
pub mod verification;

pub use error::{Error, Result, SolverError};
pub use field::{
    clamp_field, control_budget, inner_product, integrate, integrate_with, ControlShape,
    ControlSpec, FieldRole, SpaceTimeField, TimeRule,
};
pub use grid::{build_grid, Grid, GridConfig};
pub use tissue::{build_tissue_map, RegionSpec, Tissue, TissueConfig, TissueMap};
