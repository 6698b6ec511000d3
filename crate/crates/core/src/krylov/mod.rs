//! Sparse kernels and iterative solvers.

mod chebyshev;
mod csr;
mod factor;
mod gmres;

pub use chebyshev::{
    chebyshev_contraction, chebyshev_mass_solve, ChebyshevMassSolver, MASS_SPECTRUM_BOUNDS,
};
pub use csr::CsrMatrix;
pub use factor::{sparse_factorize, sparse_factorize_with, LuPattern, SparseLu};
pub use gmres::{gmres, GmresOptions, GmresStats, Termination};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KrylovError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("factorisation failed: {0}")]
    Factorization(String),
    #[error("GMRES breakdown at iteration {iteration} with residual {residual:.3e}")]
    Breakdown { iteration: usize, residual: f64 },
    #[error("reference norm must be positive (got {0})")]
    InvalidReference(f64),
}

/// A square linear map `y = A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        assert_eq!(self.nrows(), self.ncols(), "operator must be square");
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityOperator {
    n: usize,
}

impl IdentityOperator {
    pub fn new(n: usize) -> Self {
        IdentityOperator { n }
    }
}

impl LinearOperator for IdentityOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
