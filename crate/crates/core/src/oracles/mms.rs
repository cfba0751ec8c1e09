//! Manufactured solution on the unit square with `Gamma1 = {x = 0}`.
//!
//! Exact fields: stream function `psi = x^2 (1-x)^2 sin^2(pi y) e^-t`,
//! velocity `z = (d psi/dy, -d psi/dx)`, temperature `w = x sin(pi y) e^-t`,
//! head `P = cos(pi x) cos(pi y) e^-t`. Forcing and boundary data are derived
//! from the strong operator matching the weak form, with every derivative
//! taken by fourth-order central differences.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::coefficients::{CoefficientLaw, CoefficientModel};
use crate::mesh::Side;
use crate::scalar::{Point2, Real};
use crate::solver::ProblemData;

/// Step of the difference stencils.
pub const FD_STEP: f64 = 1e-3;

/// Side carrying the head datum in the manufactured problem.
pub const MMS_GAMMA1: [Side; 1] = [Side::Left];

/// Fourth-order central difference of `f` at `s`.
#[inline]
pub fn central_difference(f: impl Fn(f64) -> f64, s: f64) -> f64 {
    let h = FD_STEP;
    (-f(s + 2.0 * h) + 8.0 * f(s + h) - 8.0 * f(s - h) + f(s - 2.0 * h)) / (12.0 * h)
}

fn to_f64_law<T: Real>(law: &CoefficientLaw<T>) -> CoefficientLaw<f64> {
    match *law {
        CoefficientLaw::Constant { value } => CoefficientLaw::Constant { value: value.as_f64() },
        CoefficientLaw::ClampedAffine { intercept, slope, lower, upper } => CoefficientLaw::ClampedAffine {
            intercept: intercept.as_f64(),
            slope: slope.as_f64(),
            lower: lower.as_f64(),
            upper: upper.as_f64(),
        },
        CoefficientLaw::TanhBlend { low, high } => CoefficientLaw::TanhBlend { low: low.as_f64(), high: high.as_f64() },
    }
}

/// Exact fields and derived data of the manufactured problem, in `f64`.
#[derive(Clone, Debug)]
pub struct MmsProblem {
    pub viscosity: CoefficientLaw<f64>,
    pub conductivity: CoefficientLaw<f64>,
    pub beta: f64,
    pub buoyancy_sign: f64,
    pub gravity: [f64; 2],
}

impl MmsProblem {
    pub fn new<T: Real>(model: &CoefficientModel<T>, beta: T, gravity: [T; 2]) -> Self {
        MmsProblem {
            viscosity: to_f64_law(&model.viscosity),
            conductivity: to_f64_law(&model.conductivity),
            beta: beta.as_f64(),
            buoyancy_sign: 1.0,
            gravity: [gravity[0].as_f64(), gravity[1].as_f64()],
        }
    }

    pub fn stream(x: f64, y: f64, t: f64) -> f64 {
        let s = (PI * y).sin();
        x * x * (1.0 - x) * (1.0 - x) * s * s * (-t).exp()
    }

    pub fn velocity(x: f64, y: f64, t: f64) -> [f64; 2] {
        let e = (-t).exp();
        let xx = x * x * (1.0 - x) * (1.0 - x);
        let dxx = 2.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
        let s = (PI * y).sin();
        [xx * PI * (2.0 * PI * y).sin() * e, -dxx * s * s * e]
    }

    pub fn temperature(x: f64, y: f64, t: f64) -> f64 {
        x * (PI * y).sin() * (-t).exp()
    }

    pub fn head(x: f64, y: f64, t: f64) -> f64 {
        (PI * x).cos() * (PI * y).cos() * (-t).exp()
    }

    /// `rot z = dz2/dx - dz1/dy` by differences.
    pub fn vorticity(x: f64, y: f64, t: f64) -> f64 {
        central_difference(|s| Self::velocity(s, y, t)[1], x) - central_difference(|s| Self::velocity(x, s, t)[0], y)
    }

    /// Divergence of the exact velocity by differences.
    pub fn divergence(x: f64, y: f64, t: f64) -> f64 {
        central_difference(|s| Self::velocity(s, y, t)[0], x) + central_difference(|s| Self::velocity(x, s, t)[1], y)
    }

    /// `dz/dt + rot(gamma(w) rot z) + rot z (e3 x z) + sign beta w g + grad P`.
    pub fn momentum_forcing(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let flux = |x: f64, y: f64| self.viscosity.eval(Self::temperature(x, y, t)) * Self::vorticity(x, y, t);
        let z = Self::velocity(x, y, t);
        let dz = [
            central_difference(|s| Self::velocity(x, y, s)[0], t),
            central_difference(|s| Self::velocity(x, y, s)[1], t),
        ];
        let rot_flux = [central_difference(|s| flux(x, s), y), -central_difference(|s| flux(s, y), x)];
        let omega = Self::vorticity(x, y, t);
        let w = Self::temperature(x, y, t);
        let grad_p = [central_difference(|s| Self::head(s, y, t), x), central_difference(|s| Self::head(x, s, t), y)];
        let b = self.buoyancy_sign * self.beta * w;
        [
            dz[0] + rot_flux[0] - omega * z[1] + b * self.gravity[0] + grad_p[0],
            dz[1] + rot_flux[1] + omega * z[0] + b * self.gravity[1] + grad_p[1],
        ]
    }

    /// `dw/dt - div(k(w) grad w) + z . grad w`.
    pub fn heat_forcing(&self, x: f64, y: f64, t: f64) -> f64 {
        let k = |x: f64, y: f64| self.conductivity.eval(Self::temperature(x, y, t));
        let wx = |x: f64, y: f64| central_difference(|s| Self::temperature(s, y, t), x);
        let wy = |x: f64, y: f64| central_difference(|s| Self::temperature(x, s, t), y);
        let div = central_difference(|s| k(s, y) * wx(s, y), x) + central_difference(|s| k(x, s) * wy(x, s), y);
        let z = Self::velocity(x, y, t);
        central_difference(|s| Self::temperature(x, y, s), t) - div + z[0] * wx(x, y) + z[1] * wy(x, y)
    }

    /// Outward normal of the unit square at a boundary point (nearest side).
    pub fn outward_normal(x: f64, y: f64) -> [f64; 2] {
        let candidates = [(x, [-1.0, 0.0]), (1.0 - x, [1.0, 0.0]), (y, [0.0, -1.0]), (1.0 - y, [0.0, 1.0])];
        candidates.iter().min_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap()).unwrap().1
    }

    /// Head datum on Gamma1: the load pairs it with `+phi . n`, so it is
    /// the negative trace of the head.
    pub fn head_datum(x: f64, y: f64, t: f64) -> f64 {
        -Self::head(x, y, t)
    }

    /// Flux datum on Gamma2: `k(w) dw/dn`, paired with `+mu` in the load.
    pub fn flux_datum(&self, x: f64, y: f64, t: f64) -> f64 {
        let n = Self::outward_normal(x, y);
        let grad = [
            central_difference(|s| Self::temperature(s, y, t), x),
            central_difference(|s| Self::temperature(x, s, t), y),
        ];
        self.conductivity.eval(Self::temperature(x, y, t)) * (grad[0] * n[0] + grad[1] * n[1])
    }

    /// Problem data for the solver with the given coefficient model.
    pub fn problem_data<T: Real>(&self, model: &CoefficientModel<T>) -> ProblemData<T> {
        let lift = |p: Point2<T>| (p[0].as_f64(), p[1].as_f64());
        let (m1, m2) = (self.clone(), self.clone());
        let gravity = [T::lit(self.gravity[0]), T::lit(self.gravity[1])];
        ProblemData {
            coefficients: *model,
            beta: T::lit(self.beta),
            buoyancy_sign: T::lit(self.buoyancy_sign),
            gravity: Arc::new(move |_| gravity),
            f1: Arc::new(move |p, t| {
                let (x, y) = lift(p);
                let f = m1.momentum_forcing(x, y, t.as_f64());
                [T::lit(f[0]), T::lit(f[1])]
            }),
            f2: Arc::new(move |p, t| {
                let (x, y) = lift(p);
                T::lit(m2.heat_forcing(x, y, t.as_f64()))
            }),
            v1: Arc::new(move |p, t| {
                let (x, y) = lift(p);
                T::lit(Self::head_datum(x, y, t.as_f64()))
            }),
            v2: {
                let m = self.clone();
                Arc::new(move |p, t| {
                    let (x, y) = lift(p);
                    T::lit(m.flux_datum(x, y, t.as_f64()))
                })
            },
            z0: Arc::new(move |p| {
                let (x, y) = lift(p);
                let v = Self::velocity(x, y, 0.0);
                [T::lit(v[0]), T::lit(v[1])]
            }),
            w0: Arc::new(move |p| {
                let (x, y) = lift(p);
                T::lit(Self::temperature(x, y, 0.0))
            }),
        }
    }
}

/// Manufactured problem for `model`, buoyancy `beta` and constant gravity `g`.
pub fn make_mms_problem<T: Real>(model: &CoefficientModel<T>, beta: T, g: [T; 2]) -> ProblemData<T> {
    MmsProblem::new(model, beta, g).problem_data(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Closed-form forcings for unit coefficients and no buoyancy.
    fn hand_forcing(x: f64, y: f64, t: f64) -> ([f64; 2], f64) {
        let e = (-t).exp();
        let xx = x * x * (1.0 - x) * (1.0 - x);
        let x1 = 2.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
        let x2 = 2.0 * (1.0 - 6.0 * x + 6.0 * x * x);
        let x3 = 24.0 * x - 12.0;
        let s = (PI * y).sin();
        let yy = s * s;
        let y1 = PI * (2.0 * PI * y).sin();
        let y2 = 2.0 * PI * PI * (2.0 * PI * y).cos();
        let y3 = -4.0 * PI.powi(3) * (2.0 * PI * y).sin();
        let z = [xx * y1 * e, -x1 * yy * e];
        let omega = -(x2 * yy + xx * y2) * e;
        let omega_x = -(x3 * yy + x1 * y2) * e;
        let omega_y = -(x2 * y1 + xx * y3) * e;
        let grad_p = [-PI * (PI * x).sin() * (PI * y).cos() * e, -PI * (PI * x).cos() * (PI * y).sin() * e];
        let f1 = [-z[0] + omega_y - omega * z[1] + grad_p[0], -z[1] - omega_x + omega * z[0] + grad_p[1]];
        let w = x * s * e;
        let wx = s * e;
        let wy = PI * x * (PI * y).cos() * e;
        let f2 = -w + PI * PI * w + z[0] * wx + z[1] * wy;
        (f1, f2)
    }

    fn unit() -> MmsProblem {
        MmsProblem::new(&CoefficientModel::constant(1.0, 1.0).unwrap(), 0.0, [0.0, -1.0])
    }

    #[test]
    fn velocity_vanishes_at_left_midpoint() {
        assert_eq!(MmsProblem::velocity(0.0, 0.5, 0.0), [0.0, 0.0]);
    }

    #[test]
    fn velocity_matches_stream_function() {
        for &(x, y, t) in &[(0.3, 0.7, 0.0), (0.81, 0.12, 0.4)] {
            let z = MmsProblem::velocity(x, y, t);
            let dy = central_difference(|s| MmsProblem::stream(x, s, t), y);
            let dx = central_difference(|s| MmsProblem::stream(s, y, t), x);
            assert!((z[0] - dy).abs() < 1e-9 && (z[1] + dx).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_fields_satisfy_boundary_conditions() {
        for k in 0..100 {
            let s = k as f64 / 99.0;
            for (x, y) in [(0.0, s), (1.0, s), (s, 0.0), (s, 1.0)] {
                let z = MmsProblem::velocity(x, y, 0.3);
                assert!(z[0].abs() <= 1e-12 && z[1].abs() <= 1e-12);
            }
            assert!(MmsProblem::temperature(0.0, s, 0.3).abs() <= 1e-12);
        }
    }

    #[test]
    fn exact_velocity_is_solenoidal() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let (x, y) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            assert!(MmsProblem::divergence(x, y, 0.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn heat_forcing_at_centre() {
        let f = unit().heat_forcing(0.5, 0.5, 0.0);
        assert!((f - (PI * PI / 2.0 - 0.5)).abs() < 1e-6);
    }

    #[test]
    fn stencils_match_hand_derivation() {
        let m = unit();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let (x, y, t) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..0.5));
            let (f1, f2) = hand_forcing(x, y, t);
            let g1 = m.momentum_forcing(x, y, t);
            let g2 = m.heat_forcing(x, y, t);
            assert!((f1[0] - g1[0]).abs() < 1e-6 && (f1[1] - g1[1]).abs() < 1e-6, "{f1:?} {g1:?}");
            assert!((f2 - g2).abs() < 1e-6);
        }
    }

    #[test]
    fn boundary_data() {
        let m = unit();
        // Right side: k dw/dx = sin(pi y).
        assert!((m.flux_datum(1.0, 0.5, 0.0) - 1.0).abs() < 1e-9);
        // Bottom side: -dw/dy = -pi x.
        assert!((m.flux_datum(0.5, 0.0, 0.0) + PI * 0.5).abs() < 1e-9);
        assert!((MmsProblem::head_datum(0.0, 0.0, 0.0) + 1.0).abs() < 1e-15);
    }
}
