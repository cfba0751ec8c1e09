//! Dense `f64` helpers for the coarse-mesh oracles (constant estimation and
//! form audits). Problem sizes here are a few hundred unknowns.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Rows/columns `rows x cols` of `m`.
pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Orthonormal basis of `ker(d)`, columns of the returned matrix.
///
/// Eigenvectors of `d^T d` whose eigenvalue is below `rel_tol` times the
/// largest one are taken as the kernel.
pub fn nullspace(d: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = d.ncols();
    if d.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let eig = SymmetricEigen::new(d.transpose() * d);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let kernel: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] <= rel_tol * top).collect();
    let mut basis = DMatrix::zeros(n, kernel.len());
    for (c, &k) in kernel.iter().enumerate() {
        basis.set_column(c, &eig.eigenvectors.column(k));
    }
    basis
}

/// Eigenvalues of the symmetric-definite pencil `(a, b)`, ascending.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("Gram matrix of the eigenproblem is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    let mut reduced = &l_inv * a * l_inv.transpose();
    // Symmetrize against roundoff before the symmetric solver.
    reduced = (&reduced + reduced.transpose()) * 0.5;
    let mut values: Vec<f64> = SymmetricEigen::new(reduced).eigenvalues.iter().cloned().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite generalized eigenvalue".into()));
    }
    values.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(values)
}

/// Symmetric inverse square root of an SPD matrix.
pub fn inverse_sqrt(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(g.clone());
    if eig.eigenvalues.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Numeric("matrix is not positive definite".into()));
    }
    let scale = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|v| 1.0 / v.sqrt()));
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&scale) * eig.eigenvectors.transpose())
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max)
}

/// Dual norm `sqrt(r^T G^{-1} r)` of a residual vector.
pub fn dual_norm(g_chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>, r: &DVector<f64>) -> f64 {
    r.dot(&g_chol.solve(r)).max(0.0).sqrt()
}
