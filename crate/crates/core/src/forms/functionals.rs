//! Quadrature evaluation of the trilinear forms, norms and error norms.

use super::spaces::{FieldVector, FunctionSpaces, SpaceId};
use crate::error::Result;
use crate::scalar::{Point2, Real};

fn integrate<T: Real>(spaces: &FunctionSpaces<T>, f: impl Fn(usize, usize) -> T + Sync) -> T {
    spaces
        .map_elements(|e| (0..spaces.n_quad()).map(|q| spaces.weight(e, q) * f(e, q)).sum::<T>())
        .into_iter()
        .sum()
}

/// `b(u, v, w) = (rot u (e3 x v), w)`.
pub fn trilinear_b<T: Real>(spaces: &FunctionSpaces<T>, u: &FieldVector<T>, v: &FieldVector<T>, w: &FieldVector<T>) -> Result<T> {
    for f in [u, v, w] {
        spaces.check(f, SpaceId::Velocity)?;
    }
    Ok(integrate(spaces, |e, q| {
        let (_, gu) = spaces.velocity_at(e, q, &u.values);
        let (vv, _) = spaces.velocity_at(e, q, &v.values);
        let (wv, _) = spaces.velocity_at(e, q, &w.values);
        (gu[1][0] - gu[0][1]) * (wv[1] * vv[0] - wv[0] * vv[1])
    }))
}

/// `c(z, w, phi) = (z . grad w, phi)`.
pub fn trilinear_c<T: Real>(spaces: &FunctionSpaces<T>, z: &FieldVector<T>, w: &FieldVector<T>, phi: &FieldVector<T>) -> Result<T> {
    spaces.check(z, SpaceId::Velocity)?;
    spaces.check(w, SpaceId::Temperature)?;
    spaces.check(phi, SpaceId::Temperature)?;
    Ok(integrate(spaces, |e, q| {
        let (zv, _) = spaces.velocity_at(e, q, &z.values);
        let (_, gw) = spaces.scalar_at(e, q, &w.values);
        let (pv, _) = spaces.scalar_at(e, q, &phi.values);
        (zv[0] * gw[0] + zv[1] * gw[1]) * pv
    }))
}

/// Value and gradient rows of any field at a quadrature point; scalar
/// fields use the first row only.
fn eval<T: Real>(spaces: &FunctionSpaces<T>, f: &FieldVector<T>, e: usize, q: usize) -> ([T; 2], [[T; 2]; 2]) {
    match f.space {
        SpaceId::Velocity => spaces.velocity_at(e, q, &f.values),
        _ => {
            let (v, g) = spaces.scalar_at(e, q, &f.values);
            ([v, T::zero()], [g, [T::zero(); 2]])
        }
    }
}

/// `|f|^2` in L2.
pub fn l2_norm_sq<T: Real>(spaces: &FunctionSpaces<T>, f: &FieldVector<T>) -> T {
    integrate(spaces, |e, q| {
        let (v, _) = eval(spaces, f, e, q);
        v[0] * v[0] + v[1] * v[1]
    })
}

/// `(integral |f|^4)^(1/4)`.
pub fn l4_norm<T: Real>(spaces: &FunctionSpaces<T>, f: &FieldVector<T>) -> T {
    integrate(spaces, |e, q| {
        let (v, _) = eval(spaces, f, e, q);
        let s = v[0] * v[0] + v[1] * v[1];
        s * s
    })
    .sqrt()
    .sqrt()
}

/// `|grad f|^2` in L2 (all components).
pub fn grad_norm_sq<T: Real>(spaces: &FunctionSpaces<T>, f: &FieldVector<T>) -> T {
    integrate(spaces, |e, q| {
        let (_, g) = eval(spaces, f, e, q);
        g[0][0] * g[0][0] + g[0][1] * g[0][1] + g[1][0] * g[1][0] + g[1][1] * g[1][1]
    })
}

/// `|rot z|^2` in L2.
pub fn rot_norm_sq<T: Real>(spaces: &FunctionSpaces<T>, z: &FieldVector<T>) -> T {
    integrate(spaces, |e, q| {
        let (_, g) = spaces.velocity_at(e, q, &z.values);
        let r = g[1][0] - g[0][1];
        r * r
    })
}

/// Full H1 norm squared.
pub fn h1_norm_sq<T: Real>(spaces: &FunctionSpaces<T>, f: &FieldVector<T>) -> T {
    l2_norm_sq(spaces, f) + grad_norm_sq(spaces, f)
}

/// L2 distance between a velocity field and a vector function.
pub fn velocity_l2_error<T: Real>(spaces: &FunctionSpaces<T>, z: &FieldVector<T>, exact: impl Fn(Point2<T>) -> [T; 2] + Sync) -> T {
    integrate(spaces, |e, q| {
        let (v, _) = spaces.velocity_at(e, q, &z.values);
        let x = exact(spaces.quad_point(e, q));
        let (a, b) = (v[0] - x[0], v[1] - x[1]);
        a * a + b * b
    })
    .sqrt()
}

/// L2 distance between `rot z` and a scalar function.
pub fn rot_l2_error<T: Real>(spaces: &FunctionSpaces<T>, z: &FieldVector<T>, exact_rot: impl Fn(Point2<T>) -> T + Sync) -> T {
    integrate(spaces, |e, q| {
        let (_, g) = spaces.velocity_at(e, q, &z.values);
        let d = g[1][0] - g[0][1] - exact_rot(spaces.quad_point(e, q));
        d * d
    })
    .sqrt()
}

/// L2 distance between a linear scalar field and a function.
pub fn scalar_l2_error<T: Real>(spaces: &FunctionSpaces<T>, w: &FieldVector<T>, exact: impl Fn(Point2<T>) -> T + Sync) -> T {
    integrate(spaces, |e, q| {
        let (v, _) = spaces.scalar_at(e, q, &w.values);
        let d = v - exact(spaces.quad_point(e, q));
        d * d
    })
    .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::assembly::{assemble_mass, assemble_temperature_advection_unsymmetrized, assemble_velocity_advection};
    use crate::mesh::{build_rectangle_mesh, Side};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spaces() -> FunctionSpaces<f64> {
        FunctionSpaces::with_threads(&build_rectangle_mesh(3, 3, &[Side::Left]).unwrap(), 1).unwrap()
    }

    fn random(s: &FunctionSpaces<f64>, space: SpaceId, rng: &mut ChaCha8Rng) -> FieldVector<f64> {
        FieldVector { space, values: (0..s.dim(space)).map(|_| rng.random_range(-1.0..1.0)).collect() }
    }

    #[test]
    fn b_is_antisymmetric_in_last_two_arguments() {
        let s = spaces();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let zero = FieldVector::zeros(&s, SpaceId::Velocity);
        for _ in 0..10 {
            let (u, v, w) = (
                random(&s, SpaceId::Velocity, &mut rng),
                random(&s, SpaceId::Velocity, &mut rng),
                random(&s, SpaceId::Velocity, &mut rng),
            );
            assert!(trilinear_b(&s, &u, &v, &v).unwrap().abs() < 1e-13);
            let (a, b) = (trilinear_b(&s, &u, &v, &w).unwrap(), trilinear_b(&s, &u, &w, &v).unwrap());
            assert!((a + b).abs() < 1e-13);
            assert_eq!(trilinear_b(&s, &zero, &v, &w).unwrap(), 0.0);
            // Matrix form agrees with the trilinear form.
            let n = assemble_velocity_advection(&s, &u).unwrap();
            assert!((n.form(&w.values, &v.values).unwrap() - a).abs() < 1e-12);
        }
    }

    #[test]
    fn c_product_rule() {
        let s = spaces();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let z = random(&s, SpaceId::Velocity, &mut rng);
            let w = random(&s, SpaceId::Temperature, &mut rng);
            let p = random(&s, SpaceId::Temperature, &mut rng);
            let lhs = trilinear_c(&s, &z, &w, &p).unwrap() + trilinear_c(&s, &z, &p, &w).unwrap();
            let direct = integrate(&s, |e, q| {
                let (zv, _) = s.velocity_at(e, q, &z.values);
                let (wv, gw) = s.scalar_at(e, q, &w.values);
                let (pv, gp) = s.scalar_at(e, q, &p.values);
                zv[0] * (gw[0] * pv + wv * gp[0]) + zv[1] * (gw[1] * pv + wv * gp[1])
            });
            assert!((lhs - direct).abs() < 1e-12);
            let c = assemble_temperature_advection_unsymmetrized(&s, &z).unwrap();
            assert!((c.form(&p.values, &w.values).unwrap() - trilinear_c(&s, &z, &w, &p).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn norms_of_known_fields() {
        let s = spaces();
        let one = FieldVector { space: SpaceId::Temperature, values: vec![1.0; s.dim(SpaceId::Temperature)] };
        assert!((l2_norm_sq(&s, &one) - 1.0).abs() < 1e-14);
        assert!((l4_norm(&s, &one) - 1.0).abs() < 1e-14);
        assert!(grad_norm_sq(&s, &one).abs() < 1e-20);
        let shear = s.interpolate_velocity(|p| [p[1], 0.0]).unwrap();
        assert!((rot_norm_sq(&s, &shear) - 1.0).abs() < 1e-13);
        assert!((h1_norm_sq(&s, &shear) - (1.0 / 3.0 + 1.0)).abs() < 1e-13);
        let m = assemble_mass(&s, SpaceId::Velocity);
        assert!((m.form(&shear.values, &shear.values).unwrap() - l2_norm_sq(&s, &shear)).abs() < 1e-14);
        assert!(velocity_l2_error(&s, &shear, |p| [p[1], 0.0]) < 1e-14);
        assert!(rot_l2_error(&s, &shear, |_| -1.0) < 1e-13);
        assert!(scalar_l2_error(&s, &one, |_| 1.0) < 1e-14);
    }
}
