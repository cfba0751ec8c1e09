//! Backward-Euler time stepping of the coupled system with lagged
//! nonlinearities, an optional Picard loop, and per-step diagnostics.

mod constants;
mod diagnostics;
mod problem;
mod stepper;

pub use constants::estimate_constants;
pub(crate) use constants::{solenoidal_basis, temperature_coercivity, velocity_coercivity};
pub use diagnostics::{compute_diagnostics, re_ra, ConstantsSource, Diagnostics, ReRaConstants};
pub use problem::{
    initialize_state, ProblemData, ScalarField, State, StaticScalarField, StaticVectorField, VectorField,
};
pub use stepper::{run, run_from, step, SolverConfig, Stepper, Trajectory};
