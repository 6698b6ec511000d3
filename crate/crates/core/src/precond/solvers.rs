//! Sub-solvers for the pressure blocks and the constant-mode projection.

use crate::krylov::{sparse_factorize, ChebyshevMassSolver, CsrMatrix, KrylovError, LinearOperator, SparseLu};

/// Treatment of the constant-pressure null space of Laplacian-type blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NullspaceMode {
    /// Project the constant mode out of right-hand sides and results.
    #[default]
    Project,
    /// Fix one DOF to zero and solve the reduced system, no projection.
    Pin,
}

/// `p - (z.p / z.z) z`.
pub fn project_out(p: &mut [f64], z: &[f64]) {
    let zz: f64 = z.iter().map(|v| v * v).sum();
    if zz == 0.0 {
        return;
    }
    let c = p.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() / zz;
    p.iter_mut().zip(z).for_each(|(a, b)| *a -= c * b);
}

/// Solver for a singular Laplacian-type matrix whose left and right null
/// spaces are both spanned by `z`.
pub struct SingularSolve {
    lu: SparseLu,
    z: Vec<f64>,
    pin: usize,
    mode: NullspaceMode,
}

impl SingularSolve {
    pub fn new(a: &CsrMatrix, z: &[f64], mode: NullspaceMode) -> Result<Self, KrylovError> {
        let pin = z
            .iter()
            .position(|&v| v != 0.0)
            .ok_or_else(|| KrylovError::Singular("null-space vector is zero".into()))?;
        let mut t = Vec::with_capacity(a.nnz());
        for i in 0..a.nrows() {
            if i == pin {
                continue;
            }
            for (j, v) in a.row(i) {
                if j != pin {
                    t.push((i, j, v));
                }
            }
        }
        t.push((pin, pin, 1.0));
        let pinned = CsrMatrix::from_triplets(a.nrows(), a.ncols(), &t);
        Ok(SingularSolve {
            lu: sparse_factorize(&pinned)?,
            z: z.to_vec(),
            pin,
            mode,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        if self.mode == NullspaceMode::Project {
            project_out(&mut x, &self.z);
        }
        x[self.pin] = 0.0;
        self.lu.solve_in_place(&mut x);
        if self.mode == NullspaceMode::Project {
            project_out(&mut x, &self.z);
        }
        x
    }
}

/// How pressure mass matrices are inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassSolveKind {
    #[default]
    Exact,
    Chebyshev(usize),
}

pub enum MassSolve {
    Exact(SparseLu),
    Chebyshev(ChebyshevMassSolver),
}

impl MassSolve {
    pub fn new(m: &CsrMatrix, kind: MassSolveKind) -> Result<Self, KrylovError> {
        Ok(match kind {
            MassSolveKind::Exact => MassSolve::Exact(sparse_factorize(m)?),
            MassSolveKind::Chebyshev(steps) => MassSolve::Chebyshev(ChebyshevMassSolver::new(m.clone(), steps)),
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            MassSolve::Exact(lu) => lu.solve(b),
            MassSolve::Chebyshev(c) => c.apply_vec(b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn neumann_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            let d = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
            t.push((i, i, d));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn projected_solve_inverts_on_the_range() {
        let a = neumann_1d(6);
        let z = vec![1.0; 6];
        let s = SingularSolve::new(&a, &z, NullspaceMode::Project).unwrap();
        let x = [0.3, -1.0, 2.0, 0.5, 0.0, 1.1];
        let y = s.solve(&a.mul_vec(&x));
        let mut px = x.to_vec();
        project_out(&mut px, &z);
        for (a, b) in y.iter().zip(&px) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pinned_solve_fixes_the_pinned_dof() {
        let a = neumann_1d(5);
        let s = SingularSolve::new(&a, &[1.0; 5], NullspaceMode::Pin).unwrap();
        let y = s.solve(&[1.0, 0.0, 0.0, 0.0, -1.0]);
        assert_eq!(y[0], 0.0);
        let r = a.mul_vec(&y);
        for i in 1..5 {
            assert!((r[i] - [1.0, 0.0, 0.0, 0.0, -1.0][i]).abs() < 1e-12);
        }
    }
}
