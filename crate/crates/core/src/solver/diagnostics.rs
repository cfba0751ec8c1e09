use crate::forms::{grad_norm_sq, l2_norm_sq, l4_norm, rot_norm_sq, FunctionSpaces};
use crate::linalg::SparseOperator;
use crate::scalar::Real;

use super::problem::State;

/// Where the constants of the uniqueness indicator came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstantsSource {
    Default,
    Configured,
    Estimated,
}

impl ConstantsSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConstantsSource::Default => "default",
            ConstantsSource::Configured => "configured",
            ConstantsSource::Estimated => "estimated",
        }
    }
}

/// Coercivity constants `c1`, `c1_prime` and the embedding constant `d`
/// entering `Re` and `Ra`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReRaConstants<T> {
    pub c1: T,
    pub c1_prime: T,
    pub d: T,
    pub source: ConstantsSource,
}

impl<T: Real> Default for ReRaConstants<T> {
    fn default() -> Self {
        ReRaConstants { c1: T::one(), c1_prime: T::one(), d: T::one(), source: ConstantsSource::Default }
    }
}

/// `Re = 4 d |z|_L4 / (gamma0 c1)` and `Ra = 4 d^2 |w|_L4^2 / (gamma0 k0 c1 c1')`.
pub fn re_ra<T: Real>(constants: &ReRaConstants<T>, gamma0: T, k0: T, z_l4: T, w_l4: T) -> (T, T) {
    let four = T::lit(4.0);
    let re = four * constants.d * z_l4 / (gamma0 * constants.c1);
    let ra = four * constants.d * constants.d * w_l4 * w_l4 / (gamma0 * k0 * constants.c1 * constants.c1_prime);
    (re, ra)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics<T> {
    pub t: T,
    pub kinetic: T,
    pub thermal: T,
    pub rot_seminorm2: T,
    pub grad_w_norm2: T,
    pub z_l4: T,
    pub w_l4: T,
    pub re: T,
    pub ra: T,
    pub re_plus_ra: T,
    pub div_residual: T,
    pub picard_iters: usize,
    pub picard_converged: bool,
}

impl<T: Real> Diagnostics<T> {
    /// `Re + Ra < 1`.
    pub fn uniqueness_condition(&self) -> bool {
        self.re_plus_ra < T::one()
    }

    pub fn all_finite(&self) -> bool {
        [
            self.t,
            self.kinetic,
            self.thermal,
            self.rot_seminorm2,
            self.grad_w_norm2,
            self.z_l4,
            self.w_l4,
            self.re,
            self.ra,
            self.re_plus_ra,
            self.div_residual,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Norms and indicators of `state`. `divergence` is the constraint matrix.
pub fn compute_diagnostics<T: Real>(
    spaces: &FunctionSpaces<T>,
    state: &State<T>,
    divergence: &SparseOperator<T>,
    constants: &ReRaConstants<T>,
    gamma0: T,
    k0: T,
) -> Diagnostics<T> {
    let z_l4 = l4_norm(spaces, &state.z);
    let w_l4 = l4_norm(spaces, &state.w);
    let (re, ra) = re_ra(constants, gamma0, k0, z_l4, w_l4);
    let dz = divergence.matvec(&state.z.values).expect("divergence operator matches the velocity space");
    Diagnostics {
        t: state.t,
        kinetic: l2_norm_sq(spaces, &state.z),
        thermal: l2_norm_sq(spaces, &state.w),
        rot_seminorm2: rot_norm_sq(spaces, &state.z),
        grad_w_norm2: grad_norm_sq(spaces, &state.w),
        z_l4,
        w_l4,
        re,
        ra,
        re_plus_ra: re + ra,
        div_residual: dz.iter().map(|v| *v * *v).sum::<T>().sqrt(),
        picard_iters: 0,
        picard_converged: true,
    }
}
