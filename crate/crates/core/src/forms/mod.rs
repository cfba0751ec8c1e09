//! Discrete spaces and the bilinear, trilinear and load forms of the weak
//! problem.

mod assembly;
mod functionals;
mod quadrature;
mod spaces;

pub use assembly::{
    assemble_buoyancy, assemble_divergence_constraint, assemble_h1_gram, assemble_mass, assemble_rot_div,
    assemble_stiffness, assemble_temperature_advection, assemble_temperature_advection_unsymmetrized,
    assemble_temperature_diffusion, assemble_temperature_load, assemble_velocity_advection,
    assemble_velocity_diffusion, assemble_velocity_load,
};
pub use functionals::{
    grad_norm_sq, h1_norm_sq, l2_norm_sq, l4_norm, rot_l2_error, rot_norm_sq, scalar_l2_error, trilinear_b,
    trilinear_c, velocity_l2_error,
};
pub use quadrature::{EdgeRule, TriangleRule};
pub(crate) use spaces::p2_basis;
pub use spaces::{threads_from_env, BoundaryFacet, FieldVector, FunctionSpaces, SpaceId};
