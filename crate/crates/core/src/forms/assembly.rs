use super::spaces::{Dofs, FieldVector, FunctionSpaces, SpaceId};
use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::linalg::SparseOperator;
use crate::mesh::BoundaryTag;
use crate::scalar::{Point2, Real};

/// `(rot, div)` of the velocity basis function with local dof `2a + c`.
#[inline]
fn rot_div<T: Real>(grad: &[T; 2], c: usize) -> (T, T) {
    if c == 0 {
        (-grad[1], grad[0])
    } else {
        (grad[0], grad[1])
    }
}

/// L2 Gram matrix of the chosen space.
pub fn assemble_mass<T: Real>(spaces: &FunctionSpaces<T>, which: SpaceId) -> SparseOperator<T> {
    match which {
        SpaceId::Velocity => {
            let locals = spaces.map_elements(|e| {
                let mut m = vec![T::zero(); 144];
                for q in 0..spaces.n_quad() {
                    let wq = spaces.weight(e, q);
                    let n = spaces.p2_values(q);
                    for a in 0..6 {
                        for b in 0..6 {
                            let v = wq * (n[a] * n[b]);
                            for c in 0..2 {
                                m[(2 * a + c) * 12 + 2 * b + c] += v;
                            }
                        }
                    }
                }
                m
            });
            spaces.scatter(&spaces.patterns.velocity, Dofs::Velocity, Dofs::Velocity, &locals)
        }
        SpaceId::Head | SpaceId::Temperature => {
            let locals = spaces.map_elements(|e| {
                let mut m = vec![T::zero(); 9];
                for q in 0..spaces.n_quad() {
                    let wq = spaces.weight(e, q);
                    let l = spaces.lambda(q);
                    for i in 0..3 {
                        for j in 0..3 {
                            m[i * 3 + j] += wq * (l[i] * l[j]);
                        }
                    }
                }
                m
            });
            spaces.scatter(&spaces.patterns.scalar, Dofs::Scalar, Dofs::Scalar, &locals)
        }
    }
}

/// `rot-rot + div-div` matrix with the coefficient `coeff(w_h)` evaluated at
/// the quadrature points.
fn velocity_diffusion_with<T: Real>(spaces: &FunctionSpaces<T>, w: &[T], coeff: impl Fn(T) -> T + Sync) -> SparseOperator<T> {
    let locals = spaces.map_elements(|e| {
        let mut m = vec![T::zero(); 144];
        for q in 0..spaces.n_quad() {
            let (wv, _) = spaces.scalar_at(e, q, w);
            let s = spaces.weight(e, q) * coeff(wv);
            let g = spaces.p2_grads(e, q);
            let rd: [(T, T); 12] = std::array::from_fn(|l| rot_div(&g[l / 2], l % 2));
            for i in 0..12 {
                for j in 0..12 {
                    m[i * 12 + j] += s * (rd[i].0 * rd[j].0 + rd[i].1 * rd[j].1);
                }
            }
        }
        m
    });
    spaces.scatter(&spaces.patterns.velocity, Dofs::Velocity, Dofs::Velocity, &locals)
}

/// Matrix of `(gamma(w_h) rot z, rot phi) + (gamma(w_h) div z, div phi)`.
pub fn assemble_velocity_diffusion<T: Real>(
    spaces: &FunctionSpaces<T>,
    model: &CoefficientModel<T>,
    w_h: &FieldVector<T>,
) -> Result<SparseOperator<T>> {
    spaces.check(w_h, SpaceId::Temperature)?;
    Ok(velocity_diffusion_with(spaces, &w_h.values, |w| model.viscosity(w)))
}

/// Unit-coefficient `rot-rot + div-div` matrix.
pub fn assemble_rot_div<T: Real>(spaces: &FunctionSpaces<T>) -> SparseOperator<T> {
    let zero = vec![T::zero(); spaces.dim(SpaceId::Temperature)];
    velocity_diffusion_with(spaces, &zero, |_| T::one())
}

fn temperature_diffusion_with<T: Real>(spaces: &FunctionSpaces<T>, w: &[T], coeff: impl Fn(T) -> T + Sync) -> SparseOperator<T> {
    let locals = spaces.map_elements(|e| {
        let mut m = vec![T::zero(); 9];
        let gl = spaces.grad_lambda(e);
        for q in 0..spaces.n_quad() {
            let (wv, _) = spaces.scalar_at(e, q, w);
            let s = spaces.weight(e, q) * coeff(wv);
            for i in 0..3 {
                for j in 0..3 {
                    m[i * 3 + j] += s * (gl[i][0] * gl[j][0] + gl[i][1] * gl[j][1]);
                }
            }
        }
        m
    });
    spaces.scatter(&spaces.patterns.scalar, Dofs::Scalar, Dofs::Scalar, &locals)
}

/// Matrix of `(k(w_h) grad w, grad phi)`.
pub fn assemble_temperature_diffusion<T: Real>(
    spaces: &FunctionSpaces<T>,
    model: &CoefficientModel<T>,
    w_h: &FieldVector<T>,
) -> Result<SparseOperator<T>> {
    spaces.check(w_h, SpaceId::Temperature)?;
    Ok(temperature_diffusion_with(spaces, &w_h.values, |w| model.conductivity(w)))
}

/// Unit-coefficient stiffness matrix of the linear scalar space.
pub fn assemble_stiffness<T: Real>(spaces: &FunctionSpaces<T>) -> SparseOperator<T> {
    let zero = vec![T::zero(); spaces.dim(SpaceId::Temperature)];
    temperature_diffusion_with(spaces, &zero, |_| T::one())
}

/// Full H1 Gram matrix (L2 plus gradient) of the chosen space.
pub fn assemble_h1_gram<T: Real>(spaces: &FunctionSpaces<T>, which: SpaceId) -> SparseOperator<T> {
    let mass = assemble_mass(spaces, which);
    let stiff = match which {
        SpaceId::Velocity => {
            let locals = spaces.map_elements(|e| {
                let mut m = vec![T::zero(); 144];
                for q in 0..spaces.n_quad() {
                    let wq = spaces.weight(e, q);
                    let g = spaces.p2_grads(e, q);
                    for a in 0..6 {
                        for b in 0..6 {
                            let v = wq * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                            for c in 0..2 {
                                m[(2 * a + c) * 12 + 2 * b + c] += v;
                            }
                        }
                    }
                }
                m
            });
            spaces.scatter(&spaces.patterns.velocity, Dofs::Velocity, Dofs::Velocity, &locals)
        }
        _ => assemble_stiffness(spaces),
    };
    mass.add_scaled(T::one(), &stiff).expect("mass and stiffness share a pattern")
}

/// `D[k, j] = (q_k, div phi_j)`: head rows, velocity columns.
pub fn assemble_divergence_constraint<T: Real>(spaces: &FunctionSpaces<T>) -> SparseOperator<T> {
    let locals = spaces.map_elements(|e| {
        let mut m = vec![T::zero(); 36];
        for q in 0..spaces.n_quad() {
            let wq = spaces.weight(e, q);
            let l = spaces.lambda(q);
            let g = spaces.p2_grads(e, q);
            for k in 0..3 {
                for a in 0..6 {
                    for c in 0..2 {
                        m[k * 12 + 2 * a + c] += wq * (l[k] * g[a][c]);
                    }
                }
            }
        }
        m
    });
    spaces.scatter(&spaces.patterns.scalar_velocity, Dofs::Scalar, Dofs::Velocity, &locals)
}

/// `N(z_h)[i, j] = (rot z_h (e3 x phi_j), phi_i)`, skew-symmetric entry by entry.
pub fn assemble_velocity_advection<T: Real>(spaces: &FunctionSpaces<T>, z_h: &FieldVector<T>) -> Result<SparseOperator<T>> {
    spaces.check(z_h, SpaceId::Velocity)?;
    let locals = spaces.map_elements(|e| {
        let mut m = vec![T::zero(); 144];
        for q in 0..spaces.n_quad() {
            let (_, g) = spaces.velocity_at(e, q, &z_h.values);
            let s = spaces.weight(e, q) * (g[1][0] - g[0][1]);
            let n = spaces.p2_values(q);
            for a in 0..6 {
                for b in 0..6 {
                    // e3 x (N_b e1) = N_b e2 and e3 x (N_b e2) = -N_b e1.
                    let v = s * (n[a] * n[b]);
                    m[(2 * a + 1) * 12 + 2 * b] += v;
                    m[(2 * a) * 12 + 2 * b + 1] -= s * (n[b] * n[a]);
                }
            }
        }
        m
    });
    Ok(spaces.scatter(&spaces.patterns.velocity, Dofs::Velocity, Dofs::Velocity, &locals))
}

/// Skew-symmetrized transport matrix
/// `1/2 (z_h . grad mu_j, mu_i) - 1/2 (z_h . grad mu_i, mu_j)`.
pub fn assemble_temperature_advection<T: Real>(spaces: &FunctionSpaces<T>, z_h: &FieldVector<T>) -> Result<SparseOperator<T>> {
    spaces.check(z_h, SpaceId::Velocity)?;
    let half = T::lit(0.5);
    let locals = spaces.map_elements(|e| {
        let mut m = vec![T::zero(); 9];
        let gl = spaces.grad_lambda(e);
        for q in 0..spaces.n_quad() {
            let (z, _) = spaces.velocity_at(e, q, &z_h.values);
            let s = half * spaces.weight(e, q);
            let l = spaces.lambda(q);
            let adv: [T; 3] = std::array::from_fn(|k| z[0] * gl[k][0] + z[1] * gl[k][1]);
            for i in 0..3 {
                for j in (i + 1)..3 {
                    let v = s * (adv[j] * l[i] - adv[i] * l[j]);
                    m[i * 3 + j] += v;
                    m[j * 3 + i] -= v;
                }
            }
        }
        m
    });
    Ok(spaces.scatter(&spaces.patterns.scalar, Dofs::Scalar, Dofs::Scalar, &locals))
}

/// Plain transport matrix `(z_h . grad mu_j, mu_i)`.
pub fn assemble_temperature_advection_unsymmetrized<T: Real>(
    spaces: &FunctionSpaces<T>,
    z_h: &FieldVector<T>,
) -> Result<SparseOperator<T>> {
    spaces.check(z_h, SpaceId::Velocity)?;
    let locals = spaces.map_elements(|e| {
        let mut m = vec![T::zero(); 9];
        let gl = spaces.grad_lambda(e);
        for q in 0..spaces.n_quad() {
            let (z, _) = spaces.velocity_at(e, q, &z_h.values);
            let wq = spaces.weight(e, q);
            let l = spaces.lambda(q);
            for i in 0..3 {
                for j in 0..3 {
                    m[i * 3 + j] += wq * ((z[0] * gl[j][0] + z[1] * gl[j][1]) * l[i]);
                }
            }
        }
        m
    });
    Ok(spaces.scatter(&spaces.patterns.scalar, Dofs::Scalar, Dofs::Scalar, &locals))
}

/// `G[i, j] = (beta (g . phi_i), mu_j)`: velocity rows, temperature columns.
pub fn assemble_buoyancy<T: Real>(spaces: &FunctionSpaces<T>, beta: T, g: impl Fn(Point2<T>) -> [T; 2] + Sync) -> SparseOperator<T> {
    let locals = spaces.map_elements(|e| {
        let mut m = vec![T::zero(); 36];
        for q in 0..spaces.n_quad() {
            let gv = g(spaces.quad_point(e, q));
            let s = spaces.weight(e, q) * beta;
            let n = spaces.p2_values(q);
            let l = spaces.lambda(q);
            for a in 0..6 {
                for c in 0..2 {
                    for j in 0..3 {
                        m[(2 * a + c) * 3 + j] += s * (gv[c] * n[a] * l[j]);
                    }
                }
            }
        }
        m
    });
    spaces.scatter(&spaces.patterns.velocity_scalar, Dofs::Velocity, Dofs::Scalar, &locals)
}

fn non_finite<T: Real>(what: &str, p: Point2<T>, t: T) -> Error {
    Error::Input(format!("{what} is not finite at x = ({}, {}), t = {}", p[0], p[1], t))
}

/// `(f1(t), phi_i) + <v1(t), phi_i . n>` on Gamma1.
pub fn assemble_velocity_load<T: Real>(
    spaces: &FunctionSpaces<T>,
    f1: impl Fn(Point2<T>, T) -> [T; 2] + Sync,
    v1: impl Fn(Point2<T>, T) -> T,
    t: T,
) -> Result<Vec<T>> {
    let locals = spaces.map_elements(|e| -> Result<Vec<T>> {
        let mut b = vec![T::zero(); 12];
        for q in 0..spaces.n_quad() {
            let x = spaces.quad_point(e, q);
            let f = f1(x, t);
            if !(f[0].is_finite() && f[1].is_finite()) {
                return Err(non_finite("f1", x, t));
            }
            let wq = spaces.weight(e, q);
            let n = spaces.p2_values(q);
            for a in 0..6 {
                b[2 * a] += wq * (f[0] * n[a]);
                b[2 * a + 1] += wq * (f[1] * n[a]);
            }
        }
        Ok(b)
    });
    let locals = locals.into_iter().collect::<Result<Vec<_>>>()?;
    let mut out = vec![T::zero(); spaces.dim(SpaceId::Velocity)];
    spaces.scatter_vector(Dofs::Velocity, &locals, &mut out);

    for f in spaces.facets.iter().filter(|f| f.tag == BoundaryTag::Gamma1) {
        for (s, &w) in spaces.edge_rule.points.iter().zip(&spaces.edge_rule.weights) {
            let x = [f.start[0] + *s * (f.end[0] - f.start[0]), f.start[1] + *s * (f.end[1] - f.start[1])];
            let v = v1(x, t);
            if !v.is_finite() {
                return Err(non_finite("v1", x, t));
            }
            let basis = super::spaces::p2_edge_basis(*s);
            let ds = w * f.length;
            for (k, &node) in f.nodes.iter().enumerate() {
                out[2 * node] += ds * (v * basis[k] * f.normal[0]);
                out[2 * node + 1] += ds * (v * basis[k] * f.normal[1]);
            }
        }
    }
    Ok(out)
}

/// `(f2(t), mu_i) + <v2(t), mu_i>` on Gamma2.
pub fn assemble_temperature_load<T: Real>(
    spaces: &FunctionSpaces<T>,
    f2: impl Fn(Point2<T>, T) -> T + Sync,
    v2: impl Fn(Point2<T>, T) -> T,
    t: T,
) -> Result<Vec<T>> {
    let locals = spaces.map_elements(|e| -> Result<Vec<T>> {
        let mut b = vec![T::zero(); 3];
        for q in 0..spaces.n_quad() {
            let x = spaces.quad_point(e, q);
            let f = f2(x, t);
            if !f.is_finite() {
                return Err(non_finite("f2", x, t));
            }
            let wq = spaces.weight(e, q);
            let l = spaces.lambda(q);
            for k in 0..3 {
                b[k] += wq * (f * l[k]);
            }
        }
        Ok(b)
    });
    let locals = locals.into_iter().collect::<Result<Vec<_>>>()?;
    let mut out = vec![T::zero(); spaces.dim(SpaceId::Temperature)];
    spaces.scatter_vector(Dofs::Scalar, &locals, &mut out);

    for f in spaces.facets.iter().filter(|f| f.tag == BoundaryTag::Gamma2) {
        for (s, &w) in spaces.edge_rule.points.iter().zip(&spaces.edge_rule.weights) {
            let x = [f.start[0] + *s * (f.end[0] - f.start[0]), f.start[1] + *s * (f.end[1] - f.start[1])];
            let v = v2(x, t);
            if !v.is_finite() {
                return Err(non_finite("v2", x, t));
            }
            let ds = w * f.length;
            out[f.nodes[0]] += ds * (v * (T::one() - *s));
            out[f.nodes[2]] += ds * (v * *s);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rectangle_mesh, Side};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spaces(nx: usize) -> FunctionSpaces<f64> {
        FunctionSpaces::with_threads(&build_rectangle_mesh(nx, nx, &[Side::Left]).unwrap(), 1).unwrap()
    }

    fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn field(s: &FunctionSpaces<f64>, space: SpaceId, rng: &mut ChaCha8Rng) -> FieldVector<f64> {
        FieldVector { space, values: random(rng, s.dim(space)) }
    }

    #[test]
    fn temperature_mass_totals_area() {
        let s = spaces(3);
        let m = assemble_mass(&s, SpaceId::Temperature);
        assert!((m.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(m.max_asymmetry(), 0.0);
    }

    #[test]
    fn masses_are_positive_definite() {
        let s = spaces(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for which in [SpaceId::Velocity, SpaceId::Temperature] {
            let m = assemble_mass(&s, which);
            assert_eq!(m.max_asymmetry(), 0.0);
            for _ in 0..20 {
                let x = random(&mut rng, s.dim(which));
                assert!(m.form(&x, &x).unwrap() > 0.0);
            }
        }
        let mv = assemble_mass(&s, SpaceId::Velocity);
        // Integral of 1 * 1 for each component.
        let ones_x: Vec<f64> = (0..s.dim(SpaceId::Velocity)).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        assert!((mv.form(&ones_x, &ones_x).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn constant_viscosity_ignores_temperature() {
        let s = spaces(2);
        let model = CoefficientModel::constant(1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = assemble_velocity_diffusion(&s, &model, &field(&s, SpaceId::Temperature, &mut rng)).unwrap();
        let b = assemble_velocity_diffusion(&s, &model, &field(&s, SpaceId::Temperature, &mut rng)).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.max_asymmetry(), 0.0);
        let doubled = CoefficientModel::constant(2.0, 2.0).unwrap();
        let c = assemble_velocity_diffusion(&s, &doubled, &field(&s, SpaceId::Temperature, &mut rng)).unwrap();
        for (x, y) in a.values.iter().zip(&c.values) {
            assert!((2.0 * x - y).abs() <= 1e-14 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn diffusion_shift_adds_unit_matrix() {
        let s = spaces(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = field(&s, SpaceId::Temperature, &mut rng);
        let base = CoefficientModel::tanh_blend((0.5, 2.0), (1.0, 3.0)).unwrap();
        let shifted = CoefficientModel::tanh_blend((0.75, 2.25), (1.25, 3.25)).unwrap();
        let a = assemble_velocity_diffusion(&s, &base, &w).unwrap();
        let b = assemble_velocity_diffusion(&s, &shifted, &w).unwrap();
        let unit = assemble_rot_div(&s);
        for ((x, y), u) in a.values.iter().zip(&b.values).zip(&unit.values) {
            assert!((y - x - 0.25 * u).abs() < 1e-13);
        }
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let s = spaces(3);
        let model = CoefficientModel::constant(1.0, 1.0).unwrap();
        let w = FieldVector::zeros(&s, SpaceId::Temperature);
        let k = assemble_temperature_diffusion(&s, &model, &w).unwrap();
        assert_eq!(k.max_asymmetry(), 0.0);
        let ones = vec![1.0; s.dim(SpaceId::Temperature)];
        assert!(k.matvec(&ones).unwrap().iter().all(|v| v.abs() < 1e-12));
        let k2 = assemble_temperature_diffusion(&s, &CoefficientModel::constant(1.0, 2.0).unwrap(), &w).unwrap();
        for (x, y) in k.values.iter().zip(&k2.values) {
            assert!((2.0 * x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn divergence_of_simple_fields() {
        let s = spaces(3);
        let d = assemble_divergence_constraint(&s);
        let translation = s.interpolate_velocity(|_| [1.0, -2.0]).unwrap();
        assert!(d.matvec(&translation.values).unwrap().iter().all(|v| v.abs() < 1e-12));
        let strain = s.interpolate_velocity(|p| [p[0], -p[1]]).unwrap();
        assert!(d.matvec(&strain.values).unwrap().iter().all(|v| v.abs() < 1e-14));
        let expansion = s.interpolate_velocity(|p| [p[0], 0.0]).unwrap();
        let ones = vec![1.0; s.dim(SpaceId::Head)];
        // Integral of div (x, 0) = 1 over the unit square.
        assert!((d.form(&ones, &expansion.values).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn advection_operators_are_skew() {
        let s = spaces(3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let zero = FieldVector::zeros(&s, SpaceId::Velocity);
        assert_eq!(assemble_velocity_advection(&s, &zero).unwrap().max_abs(), 0.0);
        assert_eq!(assemble_temperature_advection(&s, &zero).unwrap().max_abs(), 0.0);
        for _ in 0..5 {
            let z = field(&s, SpaceId::Velocity, &mut rng);
            let n = assemble_velocity_advection(&s, &z).unwrap();
            assert_eq!(n.max_skew_violation(), 0.0);
            let c = assemble_temperature_advection(&s, &z).unwrap();
            assert_eq!(c.max_skew_violation(), 0.0);
            let x = random(&mut rng, s.dim(SpaceId::Velocity));
            assert!(n.form(&x, &x).unwrap().abs() < 1e-13 * (1.0 + n.max_abs()));
        }
    }

    #[test]
    fn skew_transport_matches_plain_transport_for_solenoidal_fields() {
        let s = spaces(4);
        // Stream function psi = x^2 y^2 gives the quadratic field (2x^2 y, -2x y^2).
        let z = s.interpolate_velocity(|p| [2.0 * p[0] * p[0] * p[1], -2.0 * p[0] * p[1] * p[1]]).unwrap();
        let skew = assemble_temperature_advection(&s, &z).unwrap();
        let plain = assemble_temperature_advection_unsymmetrized(&s, &z).unwrap();
        // Away from the boundary (interior vertex pairs) the two agree since div z = 0.
        let interior: Vec<usize> = (0..s.dim(SpaceId::Temperature))
            .filter(|&i| {
                let p = s.mesh.vertices[i];
                p[0] > 0.3 && p[0] < 0.7 && p[1] > 0.3 && p[1] < 0.7
            })
            .collect();
        for &i in &interior {
            for &j in &interior {
                assert!((skew.get(i, j) - plain.get(i, j)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn buoyancy_against_direct_quadrature() {
        let s = spaces(2);
        assert_eq!(assemble_buoyancy(&s, 0.0, |_| [0.0, -1.0]).max_abs(), 0.0);
        assert_eq!(assemble_buoyancy(&s, 1.0, |_| [0.0, 0.0]).max_abs(), 0.0);
        let g = assemble_buoyancy(&s, 1.0, |_| [0.0, -1.0]);
        let w = vec![1.0; s.dim(SpaceId::Temperature)];
        let gw = g.matvec(&w).unwrap();
        let mv = assemble_mass(&s, SpaceId::Velocity);
        let ey: Vec<f64> = (0..s.dim(SpaceId::Velocity)).map(|i| (i % 2) as f64).collect();
        let integrals = mv.matvec(&ey).unwrap();
        for i in 0..gw.len() {
            assert!((gw[i] + integrals[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn loads() {
        let s = spaces(3);
        let zero = assemble_velocity_load(&s, |_, _| [0.0, 0.0], |_, _| 0.0, 0.0).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let edge = assemble_velocity_load(&s, |_, _| [0.0, 0.0], |_, _| 1.0, 0.0).unwrap();
        // Gamma1 is the left side, normal (-1, 0): y components vanish.
        for (i, v) in edge.iter().enumerate() {
            if i % 2 == 1 {
                assert_eq!(*v, 0.0);
            }
        }
        let ones_x: Vec<f64> = (0..edge.len()).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let total: f64 = edge.iter().zip(&ones_x).map(|(a, b)| a * b).sum();
        assert!((total + 1.0).abs() < 1e-13);

        let unit = assemble_temperature_load(&s, |_, _| 1.0, |_, _| 0.0, 0.0).unwrap();
        assert!((unit.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let flux = assemble_temperature_load(&s, |_, _| 0.0, |_, _| 1.0, 0.0).unwrap();
        assert!((flux.iter().sum::<f64>() - 3.0).abs() < 1e-12);
        let bad = assemble_temperature_load(&s, |p, _| if p[0] > 0.5 { f64::NAN } else { 0.0 }, |_, _| 0.0, 0.0);
        assert!(matches!(bad, Err(Error::Input(_))));
    }

    #[test]
    fn threaded_assembly_is_identical() {
        let mesh = build_rectangle_mesh::<f64>(6, 6, &[Side::Left]).unwrap();
        let s1 = FunctionSpaces::with_threads(&mesh, 1).unwrap();
        let s4 = FunctionSpaces::with_threads(&mesh, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = field(&s1, SpaceId::Velocity, &mut rng);
        let a = assemble_velocity_advection(&s1, &z).unwrap();
        let b = assemble_velocity_advection(&s4, &z).unwrap();
        assert_eq!(a.values, b.values);
    }
}
