//! Sparse storage, fill-reducing ordering and the direct solver.

pub mod dense;
mod lu;
mod ordering;
mod sparse;

pub use lu::SparseLu;
pub use ordering::{minimum_degree, minimum_degree_deferred};
pub use sparse::{CscMatrix, SparseOperator, SparsityPattern};

use crate::error::Result;
use crate::scalar::Real;

/// Pivot threshold: the diagonal is kept if it is at least this fraction of
/// the largest candidate in its column.
pub const PIVOT_THRESHOLD: f64 = 0.1;

/// Pivot threshold for saddle systems, whose constraint columns have small
/// Schur-complement diagonals next to larger coupling entries.
pub const SADDLE_PIVOT_THRESHOLD: f64 = 1e-3;

/// Direct solver that reuses its fill-reducing order while the matrix
/// structure stays the same.
#[derive(Clone, Debug, Default)]
pub struct DirectSolver {
    trailing: usize,
    threshold: Option<f64>,
    structure: Option<(usize, Vec<usize>, Vec<usize>)>,
    order: Vec<usize>,
}

impl DirectSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solver for systems whose last `trailing` unknowns form a zero
    /// diagonal block; each of them is ordered after one of its neighbours.
    pub fn with_trailing(trailing: usize) -> Self {
        DirectSolver { trailing, threshold: Some(SADDLE_PIVOT_THRESHOLD), ..Self::default() }
    }

    fn threshold(&self) -> f64 {
        self.threshold.unwrap_or(PIVOT_THRESHOLD)
    }

    pub fn solve<T: Real>(&mut self, a: &CscMatrix<T>, b: &[T], stage: &'static str) -> Result<Vec<T>> {
        let reuse = matches!(&self.structure, Some((n, cp, ri)) if *n == a.nrows && *cp == a.col_ptr && *ri == a.row_idx);
        if !reuse {
            self.order = minimum_degree_deferred(a, a.ncols.saturating_sub(self.trailing));
            self.structure = Some((a.nrows, a.col_ptr.clone(), a.row_idx.clone()));
        }
        let lu = SparseLu::factor(a, &self.order, T::lit(self.threshold()), stage)?;
        let x = lu.solve(b)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(crate::error::Error::Divergence { stage });
        }
        Ok(x)
    }
}
