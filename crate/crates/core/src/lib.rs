//! Galerkin finite elements for the generalized Boussinesq system with
//! temperature-dependent viscosity and conductivity, a Bernoulli-head
//! condition on part of the boundary and mixed thermal conditions.
//!
//! Every numerical type is generic over a [`Real`] scalar; the `*64`
//! aliases fix it to `f64`.

pub mod cli;
pub mod coefficients;
pub mod error;
pub mod forms;
pub mod linalg;
pub mod mesh;
pub mod oracles;
pub mod scalar;
pub mod solver;

pub use coefficients::{audit_bounds_and_lipschitz, CoefficientAudit, CoefficientLaw, CoefficientModel};
pub use error::{Error, Result};
pub use forms::{FieldVector, FunctionSpaces, SpaceId};
pub use linalg::SparseOperator;
pub use mesh::{build_rectangle_mesh, refine_uniform, BoundaryTag, Mesh, Side};
pub use scalar::{Point2, Real};

pub type Mesh64 = Mesh<f64>;
pub type CoefficientModel64 = CoefficientModel<f64>;
pub type FunctionSpaces64 = FunctionSpaces<f64>;
pub type FieldVector64 = FieldVector<f64>;
pub type SparseOperator64 = SparseOperator<f64>;
pub type ProblemData64 = solver::ProblemData<f64>;
pub type State64 = solver::State<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type Diagnostics64 = solver::Diagnostics<f64>;
