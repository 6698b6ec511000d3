//! Chebyshev semi-iteration for mass-matrix solves.
//!
//! Jacobi-scaled: the iteration starts from `diag(M)^{-1} b` and each step
//! applies one product with `M`. For bilinear/biquadratic mass matrices on
//! squares the spectrum of `diag(M)^{-1} M` lies in `[1/4, 9/4]`.

use super::{CsrMatrix, LinearOperator};

pub const MASS_SPECTRUM_BOUNDS: (f64, f64) = (0.25, 2.25);

#[derive(Debug, Clone)]
pub struct ChebyshevMassSolver {
    mass: CsrMatrix,
    inv_diag: Vec<f64>,
    steps: usize,
    bounds: (f64, f64),
}

impl ChebyshevMassSolver {
    pub fn new(mass: CsrMatrix, steps: usize) -> Self {
        Self::with_bounds(mass, steps, MASS_SPECTRUM_BOUNDS)
    }

    pub fn with_bounds(mass: CsrMatrix, steps: usize, bounds: (f64, f64)) -> Self {
        assert!(bounds.0 > 0.0 && bounds.1 > bounds.0, "invalid spectral bounds");
        let inv_diag = mass.diagonal().iter().map(|d| 1.0 / d).collect();
        ChebyshevMassSolver {
            mass,
            inv_diag,
            steps,
            bounds,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        self.apply(b, &mut x);
        x
    }
}

impl LinearOperator for ChebyshevMassSolver {
    fn dim(&self) -> usize {
        self.inv_diag.len()
    }

    fn apply(&self, b: &[f64], x: &mut [f64]) {
        let n = b.len();
        for i in 0..n {
            x[i] = self.inv_diag[i] * b[i];
        }
        if self.steps == 0 {
            return;
        }
        let (lo, hi) = self.bounds;
        let theta = 0.5 * (hi + lo);
        let delta = 0.5 * (hi - lo);
        let sigma = theta / delta;

        let mut r = self.mass.mul_vec(x);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let mut rho = 1.0 / sigma;
        let mut d: Vec<f64> = (0..n).map(|i| self.inv_diag[i] * r[i] / theta).collect();
        let mut md = vec![0.0; n];
        for _ in 0..self.steps {
            for i in 0..n {
                x[i] += d[i];
            }
            self.mass.mul_vec_into(&d, &mut md);
            for i in 0..n {
                r[i] -= md[i];
            }
            let rho_next = 1.0 / (2.0 * sigma - rho);
            for i in 0..n {
                d[i] = rho_next * rho * d[i] + 2.0 * rho_next / delta * self.inv_diag[i] * r[i];
            }
            rho = rho_next;
        }
    }
}

/// `1 / T_k(sigma)`, the worst-case error reduction in the `M`-norm after `k`
/// steps when the scaled spectrum lies in `bounds`.
pub fn chebyshev_contraction(steps: usize, bounds: (f64, f64)) -> f64 {
    let (lo, hi) = bounds;
    let sigma = (hi + lo) / (hi - lo);
    let (mut t0, mut t1) = (1.0, sigma);
    if steps == 0 {
        return 1.0;
    }
    for _ in 1..steps {
        let t2 = 2.0 * sigma * t1 - t0;
        t0 = t1;
        t1 = t2;
    }
    1.0 / t1
}

/// Convenience wrapper: `steps` Chebyshev steps on `M x = b`.
pub fn chebyshev_mass_solve(mass: &CsrMatrix, b: &[f64], steps: usize) -> Vec<f64> {
    ChebyshevMassSolver::new(mass.clone(), steps).solve(b)
}
