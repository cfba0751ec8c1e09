use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Compressed-row sparsity pattern with sorted column indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Pattern coupling every row dof of an element with every column dof
    /// of the same element.
    pub fn from_element_dofs<'a>(
        nrows: usize,
        ncols: usize,
        elements: impl Iterator<Item = (&'a [usize], &'a [usize])>,
    ) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); nrows];
        for (row_dofs, col_dofs) in elements {
            for &r in row_dofs {
                rows[r].extend_from_slice(col_dofs);
            }
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend(row);
            row_ptr.push(col_idx.len());
        }
        SparsityPattern { nrows, ncols, row_ptr, col_idx }
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (start, end) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[start..end].binary_search(&j).ok().map(|k| start + k)
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }
}

/// Sparse matrix over a shared pattern. Entries are stored in canonical
/// row-major, column-sorted order.
#[derive(Clone, Debug)]
pub struct SparseOperator<T> {
    pub pattern: Arc<SparsityPattern>,
    pub values: Vec<T>,
}

impl<T: Real> SparseOperator<T> {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![T::zero(); pattern.nnz()];
        SparseOperator { pattern, values }
    }

    pub fn nrows(&self) -> usize {
        self.pattern.nrows
    }

    pub fn ncols(&self) -> usize {
        self.pattern.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.pattern.position(i, j).map_or(T::zero(), |p| self.values[p])
    }

    /// `(row, col, value)` in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows()).flat_map(move |i| {
            (self.pattern.row_ptr[i]..self.pattern.row_ptr[i + 1])
                .map(move |p| (i, self.pattern.col_idx[p], self.values[p]))
        })
    }

    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        check_len("matvec operand", self.ncols(), x.len())?;
        Ok((0..self.nrows())
            .map(|i| {
                (self.pattern.row_ptr[i]..self.pattern.row_ptr[i + 1])
                    .map(|p| self.values[p] * x[self.pattern.col_idx[p]])
                    .sum()
            })
            .collect())
    }

    pub fn matvec_transpose(&self, y: &[T]) -> Result<Vec<T>> {
        check_len("transposed matvec operand", self.nrows(), y.len())?;
        let mut out = vec![T::zero(); self.ncols()];
        for (i, j, v) in self.iter() {
            out[j] += v * y[i];
        }
        Ok(out)
    }

    /// Bilinear form `x^T A y`.
    pub fn form(&self, x: &[T], y: &[T]) -> Result<T> {
        check_len("form left operand", self.nrows(), x.len())?;
        let ay = self.matvec(y)?;
        Ok(x.iter().zip(&ay).map(|(&a, &b)| a * b).sum())
    }

    pub fn scaled(&self, s: T) -> Self {
        SparseOperator { pattern: self.pattern.clone(), values: self.values.iter().map(|&v| v * s).collect() }
    }

    /// `self + s * other`; both operands must share a pattern.
    pub fn add_scaled(&self, s: T, other: &Self) -> Result<Self> {
        if !Arc::ptr_eq(&self.pattern, &other.pattern) && self.pattern != other.pattern {
            return Err(Error::Dimension { what: "operator sum", expected: self.pattern.nnz(), got: other.pattern.nnz() });
        }
        Ok(SparseOperator {
            pattern: self.pattern.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| a + s * b).collect(),
        })
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T|` over the stored pattern (assumed structurally symmetric).
    pub fn max_asymmetry(&self) -> T {
        self.iter().fold(T::zero(), |m, (i, j, v)| m.max((v - self.get(j, i)).abs()))
    }

    /// `max |A + A^T|`.
    pub fn max_skew_violation(&self) -> T {
        self.iter().fold(T::zero(), |m, (i, j, v)| m.max((v + self.get(j, i)).abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn to_dense_f64(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows(), self.ncols());
        for (i, j, v) in self.iter() {
            m[(i, j)] += v.as_f64();
        }
        m
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { what, expected, got })
    }
}

/// Compressed-column matrix consumed by the LU factorization.
#[derive(Clone, Debug)]
pub struct CscMatrix<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Real> CscMatrix<T> {
    /// Builds from triplets; duplicates are summed in input order.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut counts = vec![0usize; ncols + 1];
        for &(_, j, _) in triplets {
            counts[j + 1] += 1;
        }
        for j in 0..ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut rows = vec![0usize; triplets.len()];
        let mut vals = vec![T::zero(); triplets.len()];
        for &(i, j, v) in triplets {
            rows[next[j]] = i;
            vals[next[j]] = v;
            next[j] += 1;
        }
        let mut col_ptr = Vec::with_capacity(ncols + 1);
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        col_ptr.push(0);
        let mut scratch: Vec<(usize, T)> = Vec::new();
        for j in 0..ncols {
            scratch.clear();
            scratch.extend((counts[j]..counts[j + 1]).map(|p| (rows[p], vals[p])));
            // Stable sort keeps the summation order of duplicates deterministic.
            scratch.sort_by_key(|&(i, _)| i);
            for &(i, v) in &scratch {
                if row_idx.len() > col_ptr[j] && *row_idx.last().unwrap() == i {
                    *values.last_mut().unwrap() += v;
                } else {
                    row_idx.push(i);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        CscMatrix { nrows, ncols, col_ptr, row_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.nrows];
        for j in 0..self.ncols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[p]] += self.values[p] * x[j];
            }
        }
        y
    }

    /// True when the structure (not the values) equals `other`'s.
    pub fn same_structure(&self, other: &Self) -> bool {
        self.nrows == other.nrows && self.ncols == other.ncols && self.col_ptr == other.col_ptr && self.row_idx == other.row_idx
    }
}
