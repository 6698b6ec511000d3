//! Exact sparse factorisation behind the `LinearOperator` interface.
//!
//! Backed by faer's supernodal LU with partial pivoting. The symbolic
//! analysis (fill-reducing ordering and elimination structure) can be shared
//! between matrices with an identical pattern, which the Picard loop exploits
//! because `F` keeps its pattern while its values change with the wind.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::MatMut;

use super::{CsrMatrix, KrylovError, LinearOperator};

/// Reusable symbolic LU analysis for one sparsity pattern.
#[derive(Clone)]
pub struct LuPattern {
    symbolic: faer::sparse::linalg::solvers::SymbolicLu<usize>,
    indptr: Arc<Vec<usize>>,
    indices: Arc<Vec<usize>>,
}

impl LuPattern {
    pub fn analyse(a: &CsrMatrix) -> Result<Self, KrylovError> {
        let (csc, indptr, indices) = to_faer(a)?;
        let symbolic = faer::sparse::linalg::solvers::SymbolicLu::try_new(csc.symbolic())
            .map_err(|e| KrylovError::Factorization(format!("{e:?}")))?;
        Ok(LuPattern {
            symbolic,
            indptr: Arc::new(indptr),
            indices: Arc::new(indices),
        })
    }

    fn matches(&self, indptr: &[usize], indices: &[usize]) -> bool {
        self.indptr.as_slice() == indptr && self.indices.as_slice() == indices
    }
}

/// Exact solver `x = A^{-1} b` from a sparse LU factorisation.
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.n).finish()
    }
}

/// CSC arrays of `a` (the CSR arrays of its transpose), as a faer matrix.
fn to_faer(a: &CsrMatrix) -> Result<(SparseColMat<usize, f64>, Vec<usize>, Vec<usize>), KrylovError> {
    if a.nrows() != a.ncols() {
        return Err(KrylovError::Dimension {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let at = a.transpose();
    let indptr = at.indptr().to_vec();
    let indices = at.indices().to_vec();
    let symbolic = SymbolicSparseColMat::new_checked(
        a.nrows(),
        a.ncols(),
        indptr.clone(),
        None,
        indices.clone(),
    );
    Ok((SparseColMat::new(symbolic, at.values().to_vec()), indptr, indices))
}

/// Factorises `a`. Fails on structural or numerical singularity.
pub fn sparse_factorize(a: &CsrMatrix) -> Result<SparseLu, KrylovError> {
    let pattern = LuPattern::analyse(a)?;
    sparse_factorize_with(a, &pattern)
}

/// Factorises `a` reusing a symbolic analysis; falls back to a fresh analysis
/// if the pattern differs.
pub fn sparse_factorize_with(a: &CsrMatrix, pattern: &LuPattern) -> Result<SparseLu, KrylovError> {
    let (csc, indptr, indices) = to_faer(a)?;
    let symbolic = if pattern.matches(&indptr, &indices) {
        pattern.symbolic.clone()
    } else {
        LuPattern::analyse(a)?.symbolic
    };
    let lu = faer::sparse::linalg::solvers::Lu::try_new_with_symbolic(symbolic, csc.as_ref()).map_err(|e| match e {
        LuError::SymbolicSingular { index } => KrylovError::Singular(format!("no pivot at step {index}")),
        other => KrylovError::Factorization(format!("{other:?}")),
    })?;
    let solver = SparseLu { n: a.nrows(), lu };
    solver.check_conditioning(a)?;
    Ok(solver)
}

impl SparseLu {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n, "solve length");
        let mat = MatMut::from_column_major_slice_mut(x, self.n, 1);
        self.lu.solve_in_place(mat);
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Rejects numerically singular factors: a solve with a generic right-hand
    /// side must stay finite and bounded by `1e13 |b| / |A|` (infinity norms).
    fn check_conditioning(&self, a: &CsrMatrix) -> Result<(), KrylovError> {
        if self.n == 0 {
            return Ok(());
        }
        let b: Vec<f64> = (0..self.n)
            .map(|i| {
                let t = (i as f64 * 0.618_033_988_749_895).fract();
                2.0 * t - 1.0 + 1e-3
            })
            .collect();
        let x = self.solve(&b);
        let a_norm = (0..a.nrows())
            .map(|i| a.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0f64, f64::max);
        let b_norm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let x_norm = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !x_norm.is_finite() || a_norm * x_norm > 1e13 * b_norm {
            return Err(KrylovError::Singular(format!(
                "condition estimate {:.3e} exceeds 1e13",
                a_norm * x_norm / b_norm
            )));
        }
        Ok(())
    }
}

impl LinearOperator for SparseLu {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        self.solve_in_place(y);
    }
}
