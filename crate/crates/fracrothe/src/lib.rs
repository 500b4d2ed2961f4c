//! Semi-discrete (Rothe) solver for multi-term time-fractional diffusion
//! equations with a fixed delay,
//!
//! ```text
//! d/dt u(t) + sum_q a_q * D^(alpha_q) u(t) + A u(t) = f(t, u(t - nu)),
//! ```
//!
//! where `D^(alpha)` is the Caputo derivative of order `0 < alpha < 1`,
//! `A` is an accretive spatial operator and `u = chi` is prescribed on
//! `[-nu, 0]`. Time is discretized with backward Euler plus the L1
//! approximation of the Caputo terms; each step is a single shifted
//! linear solve.
//!
//! Modules:
//! - [`grid`]: time mesh, L1 weights, discrete Caputo evaluator
//! - [`spaceop`]: spatial operator interface, 1D Dirichlet Laplacian
//! - [`stepper`]: the implicit scheme and trajectory generation
//! - [`rothe`]: piecewise interpolants and convergence diagnostics
//! - [`mms`]: manufactured solutions and independent reference oracles
//! - [`presets`]: ready-made problem instances

pub mod error;
pub mod grid;
pub mod mms;
pub mod presets;
pub mod rothe;
pub mod spaceop;
pub mod stepper;

pub use error::Error;
pub use grid::{caputo_l1, l1_weights, multi_term_coefficient, FractionalTerm, L1Weights, TimeGrid};
pub use rothe::{cauchy_diff, RotheFunctions};
pub use spaceop::{verify_accretivity, DirichletLaplacian1D, SpatialOperator, ZeroOperator};
pub use stepper::{delayed_state, diagnostics, run, step, step_residual, DelayHistory, ProblemSpec, RunDiagnostics, Trajectory};

/// `Result` alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
