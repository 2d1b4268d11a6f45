//! Oracles, invariant suites and diagnostics.

pub mod checks;
pub mod entropy;
pub mod invariance;
pub mod logistic;
pub mod mms;
pub mod report;

pub use checks::{
    adjoint_identity, constant_adjoint_error, gradient_vs_fd, sensitivity_vs_fd, GradientCheck,
    SensitivityCheck,
};
pub use entropy::{entropy_diagnostic, EntropyReport};
pub use invariance::{run_invariance_suite, InvarianceCase, InvarianceConfig};
pub use logistic::{logistic_exact, logistic_oracle_error};
pub use mms::{constant_solution_error, mms_convergence, ConvergenceStudy, MmsConfig, MmsReport};
pub use report::{config_hash, CaseRecord, SuiteReport};
