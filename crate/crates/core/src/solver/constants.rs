use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forms::{
    assemble_divergence_constraint, assemble_h1_gram, assemble_rot_div, assemble_stiffness, FunctionSpaces, SpaceId,
};
use crate::linalg::dense::{generalized_eigenvalues, nullspace, submatrix};
use crate::scalar::Real;

use super::diagnostics::{ConstantsSource, ReRaConstants};

const ASCENT_SEED: u64 = 0xd5_0b0e;
const ASCENT_STARTS: usize = 20;
const ASCENT_ITERATIONS: usize = 200;

/// Discrete surrogates of the coercivity constants and the `L4`-`H1`
/// embedding constant.
///
/// `c1` and `c1_prime` are smallest generalized eigenvalues against the H1
/// Gram matrix (on the discretely divergence-free constrained velocities and
/// on the constrained temperatures); `d` is a multistart lower bound for
/// `sup |f|_L4 / |f|_H1` over the linear space.
pub fn estimate_constants<T: Real>(spaces: &FunctionSpaces<T>) -> Result<ReRaConstants<T>> {
    let c1 = velocity_coercivity(spaces)?;
    let c1_prime = temperature_coercivity(spaces)?;
    let d = embedding_constant(spaces)?;
    Ok(ReRaConstants { c1: T::lit(c1), c1_prime: T::lit(c1_prime), d: T::lit(d), source: ConstantsSource::Estimated })
}

/// Orthonormal basis of the discretely divergence-free constrained
/// velocities, expressed on the free velocity dofs.
pub(crate) fn solenoidal_basis<T: Real>(spaces: &FunctionSpaces<T>) -> DMatrix<f64> {
    let d = assemble_divergence_constraint(spaces).to_dense_f64();
    let rows: Vec<usize> = (0..d.nrows()).collect();
    nullspace(&submatrix(&d, &rows, &spaces.velocity_free), 1e-10)
}

pub(crate) fn velocity_coercivity<T: Real>(spaces: &FunctionSpaces<T>) -> Result<f64> {
    let free = &spaces.velocity_free;
    let a = submatrix(&assemble_rot_div(spaces).to_dense_f64(), free, free);
    let g = submatrix(&assemble_h1_gram(spaces, SpaceId::Velocity).to_dense_f64(), free, free);
    let z = solenoidal_basis(spaces);
    if z.ncols() == 0 {
        return Err(Error::Numeric("no discretely divergence-free velocities on this mesh".into()));
    }
    let values = generalized_eigenvalues(&(z.transpose() * &a * &z), &(z.transpose() * &g * &z))?;
    Ok(values[0])
}

pub(crate) fn temperature_coercivity<T: Real>(spaces: &FunctionSpaces<T>) -> Result<f64> {
    let free = &spaces.temperature_free;
    let a = submatrix(&assemble_stiffness(spaces).to_dense_f64(), free, free);
    let g = submatrix(&assemble_h1_gram(spaces, SpaceId::Temperature).to_dense_f64(), free, free);
    Ok(generalized_eigenvalues(&a, &g)?[0])
}

/// `integral f^4` and its gradient `4 integral f^3 mu_i`.
fn quartic<T: Real>(spaces: &FunctionSpaces<T>, f: &DVector<f64>) -> (f64, DVector<f64>) {
    let values: Vec<T> = f.iter().map(|v| T::lit(*v)).collect();
    let mut total = 0.0;
    let mut grad = DVector::zeros(f.len());
    for e in 0..spaces.n_elements() {
        let tri = spaces.mesh.triangles[e];
        for q in 0..spaces.n_quad() {
            let wq = spaces.weight(e, q).as_f64();
            let (v, _) = spaces.scalar_at(e, q, &values);
            let v = v.as_f64();
            total += wq * v.powi(4);
            let l = spaces.lambda(q);
            for k in 0..3 {
                grad[tri[k]] += 4.0 * wq * v.powi(3) * l[k].as_f64();
            }
        }
    }
    (total, grad)
}

pub(crate) fn embedding_constant<T: Real>(spaces: &FunctionSpaces<T>) -> Result<f64> {
    let g = assemble_h1_gram(spaces, SpaceId::Temperature).to_dense_f64();
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("H1 Gram matrix is not positive definite".into()))?;
    let h1 = |f: &DVector<f64>| f.dot(&(&g * f)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(ASCENT_SEED);
    let mut best = 0.0f64;
    for _ in 0..ASCENT_STARTS {
        // Smooth mesh-independent start: random cosine combination.
        let mut coef = [[0.0; 3]; 3];
        for row in coef.iter_mut() {
            for c in row.iter_mut() {
                *c = rng.random_range(-1.0..1.0);
            }
        }
        let pi = std::f64::consts::PI;
        let mut f = DVector::from_iterator(
            spaces.mesh.vertices.len(),
            spaces.mesh.vertices.iter().map(|p| {
                let (x, y) = (p[0].as_f64(), p[1].as_f64());
                let mut s = 0.0;
                for (m1, row) in coef.iter().enumerate() {
                    for (m2, c) in row.iter().enumerate() {
                        s += c * (m1 as f64 * pi * x).cos() * (m2 as f64 * pi * y).cos();
                    }
                }
                s
            }),
        );
        let n0 = h1(&f);
        if !(n0 > 0.0) {
            continue;
        }
        f /= n0;
        let (mut value, mut grad) = quartic(spaces, &f);
        let mut step = 0.5;
        for _ in 0..ASCENT_ITERATIONS {
            // Riesz representative of the gradient, projected tangentially to the sphere.
            let r = chol.solve(&grad);
            let tangent = &r - &f * f.dot(&(&g * &r));
            let candidate = &f + &tangent * (step / value.max(1e-300));
            let nc = h1(&candidate);
            let candidate = candidate / nc;
            let (cv, cg) = quartic(spaces, &candidate);
            if cv > value {
                f = candidate;
                value = cv;
                grad = cg;
                step *= 1.5;
            } else {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
        best = best.max(value.powf(0.25));
    }
    if !(best > 0.0 && best.is_finite()) {
        return Err(Error::Numeric("embedding-constant ascent produced no admissible value".into()));
    }
    Ok(best)
}
