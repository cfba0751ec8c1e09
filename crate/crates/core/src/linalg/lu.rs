//! Left-looking sparse LU with threshold partial pivoting.
//!
//! Columns are processed in a fill-reducing order `q`; each column is
//! obtained by a sparse triangular solve against the part of `L` computed so
//! far, then a row pivot is chosen among rows not yet pivotal. The diagonal
//! candidate is preferred when it is within `threshold` of the column
//! maximum, which keeps the symmetric ordering effective on saddle systems
//! whose constraint block has a zero diagonal.

use super::sparse::CscMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct SparseLu<T> {
    n: usize,
    /// Column order used during factorization.
    q: Vec<usize>,
    /// `pinv[row] = pivot position` of each original row.
    pinv: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<T>,
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<T>,
}

impl<T: Real> SparseLu<T> {
    /// Factorizes `P A Q = L U`. `stage` names the system in error messages.
    pub fn factor(a: &CscMatrix<T>, q: &[usize], threshold: T, stage: &'static str) -> Result<Self> {
        let n = a.ncols;
        if a.nrows != n || q.len() != n {
            return Err(Error::Dimension { what: "LU factorization", expected: n, got: a.nrows.min(q.len()) });
        }
        let mut lu = SparseLu {
            n,
            q: q.to_vec(),
            pinv: vec![NONE; n],
            l_ptr: Vec::with_capacity(n + 1),
            l_idx: Vec::with_capacity(4 * a.nnz()),
            l_val: Vec::with_capacity(4 * a.nnz()),
            u_ptr: Vec::with_capacity(n + 1),
            u_idx: Vec::with_capacity(4 * a.nnz()),
            u_val: Vec::with_capacity(4 * a.nnz()),
        };
        let mut x = vec![T::zero(); n];
        let mut mark = vec![NONE; n];
        let mut reach: Vec<usize> = Vec::with_capacity(n);
        let mut stack: Vec<(usize, usize)> = Vec::new();

        for k in 0..n {
            lu.l_ptr.push(lu.l_idx.len());
            lu.u_ptr.push(lu.u_idx.len());
            let col = q[k];
            let (start, end) = (a.col_ptr[col], a.col_ptr[col + 1]);

            // Nonzero pattern of L \ A(:, col), in topological order.
            reach.clear();
            for &i in &a.row_idx[start..end] {
                if mark[i] != k {
                    lu.depth_first(i, k, &mut mark, &mut stack, &mut reach);
                }
            }
            for p in start..end {
                x[a.row_idx[p]] = a.values[p];
            }
            for &j in reach.iter().rev() {
                let jp = lu.pinv[j];
                if jp == NONE {
                    continue;
                }
                let xj = x[j];
                for p in lu.l_ptr[jp] + 1..lu.l_ptr[jp + 1] {
                    x[lu.l_idx[p]] -= lu.l_val[p] * xj;
                }
            }

            let mut pivot_row = NONE;
            let mut largest = -T::one();
            for &i in reach.iter().rev() {
                if lu.pinv[i] == NONE {
                    let v = x[i].abs();
                    if v > largest {
                        largest = v;
                        pivot_row = i;
                    }
                } else {
                    lu.u_idx.push(lu.pinv[i]);
                    lu.u_val.push(x[i]);
                }
            }
            if pivot_row == NONE || !(largest > T::zero()) {
                return Err(Error::Singular { stage, column: k });
            }
            if !largest.is_finite() {
                return Err(Error::Divergence { stage });
            }
            if lu.pinv[col] == NONE && mark[col] == k && x[col].abs() >= largest * threshold {
                pivot_row = col;
            }
            let pivot = x[pivot_row];
            lu.u_idx.push(k);
            lu.u_val.push(pivot);
            lu.pinv[pivot_row] = k;
            lu.l_idx.push(pivot_row);
            lu.l_val.push(T::one());
            for &i in reach.iter().rev() {
                if lu.pinv[i] == NONE {
                    lu.l_idx.push(i);
                    lu.l_val.push(x[i] / pivot);
                }
                x[i] = T::zero();
            }
        }
        lu.l_ptr.push(lu.l_idx.len());
        lu.u_ptr.push(lu.u_idx.len());
        for i in lu.l_idx.iter_mut() {
            *i = lu.pinv[*i];
        }
        Ok(lu)
    }

    /// Iterative DFS from row `root` through the columns of `L` built so far;
    /// appends nodes to `reach` in postorder.
    fn depth_first(&self, root: usize, k: usize, mark: &mut [usize], stack: &mut Vec<(usize, usize)>, reach: &mut Vec<usize>) {
        mark[root] = k;
        stack.push((root, 0));
        while let Some(top) = stack.last_mut() {
            let node = top.0;
            let jp = self.pinv[node];
            let children = if jp == NONE { &[][..] } else { &self.l_idx[self.l_ptr[jp] + 1..self.l_ptr[jp + 1]] };
            let mut next = None;
            while top.1 < children.len() {
                let child = children[top.1];
                top.1 += 1;
                if mark[child] != k {
                    next = Some(child);
                    break;
                }
            }
            match next {
                Some(child) => {
                    mark[child] = k;
                    stack.push((child, 0));
                }
                None => {
                    stack.pop();
                    reach.push(node);
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn off_diagonal_pivots(&self) -> usize {
        (0..self.n).filter(|&k| self.pinv[self.q[k]] != k).count()
    }

    pub fn fill(&self) -> usize {
        self.l_idx.len() + self.u_idx.len()
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if b.len() != self.n {
            return Err(Error::Dimension { what: "LU solve", expected: self.n, got: b.len() });
        }
        let mut y = vec![T::zero(); self.n];
        for (i, &v) in b.iter().enumerate() {
            y[self.pinv[i]] = v;
        }
        for j in 0..self.n {
            let yj = y[j];
            for p in self.l_ptr[j] + 1..self.l_ptr[j + 1] {
                y[self.l_idx[p]] -= self.l_val[p] * yj;
            }
        }
        for j in (0..self.n).rev() {
            let diag = self.u_ptr[j + 1] - 1;
            y[j] /= self.u_val[diag];
            let yj = y[j];
            for p in self.u_ptr[j]..diag {
                y[self.u_idx[p]] -= self.u_val[p] * yj;
            }
        }
        let mut x = vec![T::zero(); self.n];
        for (k, &col) in self.q.iter().enumerate() {
            x[col] = y[k];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::super::ordering::minimum_degree;
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual(a: &CscMatrix<f64>, x: &[f64], b: &[f64]) -> f64 {
        a.matvec(x).iter().zip(b).map(|(r, b)| (r - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn solves_saddle_point_with_zero_block() {
        // [2 0 1; 0 2 1; 1 1 0]
        let t = [(0, 0, 2.0), (1, 1, 2.0), (0, 2, 1.0), (1, 2, 1.0), (2, 0, 1.0), (2, 1, 1.0)];
        let a = CscMatrix::from_triplets(3, 3, &t);
        for q in [vec![0, 1, 2], vec![2, 1, 0], vec![2, 0, 1]] {
            let lu = SparseLu::factor(&a, &q, 0.1, "test").unwrap();
            let b = [1.0, 2.0, 3.0];
            let x = lu.solve(&b).unwrap();
            assert!(residual(&a, &x, &b) < 1e-14, "order {q:?}");
        }
        let q = super::super::ordering::minimum_degree_deferred(&a, 2);
        assert_eq!(SparseLu::factor(&a, &q, 1e-3, "test").unwrap().off_diagonal_pivots(), 0);
        assert!(SparseLu::factor(&a, &[2, 0, 1], 0.1, "test").unwrap().off_diagonal_pivots() > 0);
    }

    #[test]
    fn singular_matrix_reported() {
        let a = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 1.0), (0, 1, 2.0), (1, 1, 2.0)]);
        let err = SparseLu::factor(&a, &[0, 1], 0.1, "stage-x").unwrap_err();
        assert!(matches!(err, Error::Singular { stage: "stage-x", .. }));
    }

    #[test]
    fn random_sparse_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 5, 40, 200] {
            let mut t = Vec::new();
            for i in 0..n {
                t.push((i, i, rng.random_range(-1.0..1.0)));
                for _ in 0..3 {
                    let j = rng.random_range(0..n);
                    t.push((i, j, rng.random_range(-1.0..1.0)));
                }
            }
            let a = CscMatrix::from_triplets(n, n, &t);
            let q = minimum_degree(&a);
            let lu = SparseLu::factor(&a, &q, 0.1, "random").unwrap();
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let x = lu.solve(&b).unwrap();
            // Dense reference via nalgebra.
            let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
            for j in 0..n {
                for p in a.col_ptr[j]..a.col_ptr[j + 1] {
                    dense[(a.row_idx[p], j)] += a.values[p];
                }
            }
            let reference = dense.lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
            for i in 0..n {
                assert!((x[i] - reference[i]).abs() < 1e-8 * (1.0 + reference[i].abs()), "n={n}");
            }
        }
    }

    #[test]
    fn single_precision_factorization() {
        let t = [(0, 0, 4.0f32), (1, 0, 1.0), (0, 1, 1.0), (1, 1, 3.0)];
        let a = CscMatrix::from_triplets(2, 2, &t);
        let x = SparseLu::factor(&a, &[1, 0], 0.1, "f32").unwrap().solve(&[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-6);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-6);
    }
}
