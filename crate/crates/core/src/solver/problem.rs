use std::sync::Arc;

use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::forms::{FieldVector, FunctionSpaces, SpaceId};
use crate::scalar::{Point2, Real};

pub type ScalarField<T> = Arc<dyn Fn(Point2<T>, T) -> T + Send + Sync>;
pub type VectorField<T> = Arc<dyn Fn(Point2<T>, T) -> [T; 2] + Send + Sync>;
pub type StaticVectorField<T> = Arc<dyn Fn(Point2<T>) -> [T; 2] + Send + Sync>;
pub type StaticScalarField<T> = Arc<dyn Fn(Point2<T>) -> T + Send + Sync>;

/// Coefficients, forcing, boundary data and initial data of one problem.
#[derive(Clone)]
pub struct ProblemData<T> {
    pub coefficients: CoefficientModel<T>,
    pub beta: T,
    /// `+1` puts `(beta w g, phi)` on the left of the momentum equation.
    pub buoyancy_sign: T,
    pub gravity: StaticVectorField<T>,
    pub f1: VectorField<T>,
    pub f2: ScalarField<T>,
    /// Bernoulli-head datum on Gamma1.
    pub v1: ScalarField<T>,
    /// Heat-flux datum on Gamma2.
    pub v2: ScalarField<T>,
    pub z0: StaticVectorField<T>,
    pub w0: StaticScalarField<T>,
}

impl<T: Real> ProblemData<T> {
    /// No forcing, no boundary data, zero initial state and no buoyancy.
    pub fn zero(coefficients: CoefficientModel<T>) -> Self {
        ProblemData {
            coefficients,
            beta: T::zero(),
            buoyancy_sign: T::one(),
            gravity: Arc::new(|_| [T::zero(), -T::one()]),
            f1: Arc::new(|_, _| [T::zero(); 2]),
            f2: Arc::new(|_, _| T::zero()),
            v1: Arc::new(|_, _| T::zero()),
            v2: Arc::new(|_, _| T::zero()),
            z0: Arc::new(|_| [T::zero(); 2]),
            w0: Arc::new(|_| T::zero()),
        }
    }

    /// Largest `|g|` over the quadrature points of the mesh.
    pub fn gravity_sup(&self, spaces: &FunctionSpaces<T>) -> T {
        let mut sup = T::zero();
        for e in 0..spaces.n_elements() {
            for q in 0..spaces.n_quad() {
                let g = (self.gravity)(spaces.quad_point(e, q));
                sup = sup.max(g[0].hypot(g[1]));
            }
        }
        sup
    }
}

impl<T: Real> std::fmt::Debug for ProblemData<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("coefficients", &self.coefficients)
            .field("beta", &self.beta)
            .field("buoyancy_sign", &self.buoyancy_sign)
            .finish_non_exhaustive()
    }
}

/// Discrete state at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct State<T> {
    pub t: T,
    pub z: FieldVector<T>,
    pub w: FieldVector<T>,
    pub p: FieldVector<T>,
}

impl<T: Real> State<T> {
    pub fn zeros(spaces: &FunctionSpaces<T>) -> Self {
        State {
            t: T::zero(),
            z: FieldVector::zeros(spaces, SpaceId::Velocity),
            w: FieldVector::zeros(spaces, SpaceId::Temperature),
            p: FieldVector::zeros(spaces, SpaceId::Head),
        }
    }
}

/// Nodal interpolants of the initial data with the essential values imposed.
pub fn initialize_state<T: Real>(spaces: &FunctionSpaces<T>, problem: &ProblemData<T>) -> Result<State<T>> {
    let mut z = spaces
        .interpolate_velocity(|p| (problem.z0)(p))
        .map_err(|e| Error::Input(format!("initial velocity: {e}")))?;
    let mut w = spaces
        .interpolate_scalar(SpaceId::Temperature, |p| (problem.w0)(p))
        .map_err(|e| Error::Input(format!("initial temperature: {e}")))?;
    spaces.constrain(&mut z);
    spaces.constrain(&mut w);
    Ok(State { t: T::zero(), z, w, p: FieldVector::zeros(spaces, SpaceId::Head) })
}
