#![allow(dead_code)]

use faer::linalg::solvers::Solve;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twophase_core::krylov::CsrMatrix;

pub const AIR_WATER: (f64, f64) = (1.2e-3, 1.8e-2);

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `max |a - b| / max(|b|, tiny)`.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    d / max_abs(b).max(1e-300)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn project(p: &mut [f64], z: &[f64]) {
    let c = dot(p, z) / dot(z, z);
    p.iter_mut().zip(z).for_each(|(a, b)| *a -= c * b);
}

pub fn to_mat(a: &CsrMatrix) -> Mat<f64> {
    let mut m = Mat::<f64>::zeros(a.nrows(), a.ncols());
    for i in 0..a.nrows() {
        for (j, v) in a.row(i) {
            m[(i, j)] += v;
        }
    }
    m
}

pub fn mat_vec(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect()
}

/// Dense LU solve.
pub fn dense_solve(a: &Mat<f64>, b: &[f64]) -> Vec<f64> {
    let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let x = a.partial_piv_lu().solve(&rhs);
    (0..b.len()).map(|i| x[(i, 0)]).collect()
}

/// Solution of `A x = P b` with `z.x = 0` for a singular `A` whose null
/// space is spanned by `z`, via the bordered system `[A z; z^T 0]`.
pub fn bordered_solve(a: &Mat<f64>, z: &[f64], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut pb = b.to_vec();
    project(&mut pb, z);
    let k = Mat::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
        (true, true) => a[(i, j)],
        (true, false) => z[i],
        (false, true) => z[j],
        _ => 0.0,
    });
    let mut rhs = pb;
    rhs.push(0.0);
    let mut x = dense_solve(&k, &rhs);
    x.truncate(n);
    x
}

/// Polynomials in one variable on the reference interval `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn mul(&self, o: &Poly) -> Poly {
        let mut c = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly(c)
    }

    pub fn deriv(&self) -> Poly {
        if self.0.len() == 1 {
            return Poly(vec![0.0]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }

    /// Exact integral over `[-1, 1]`.
    pub fn integral(&self) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(k, c)| if k % 2 == 0 { 2.0 * c / (k as f64 + 1.0) } else { 0.0 })
            .sum()
    }
}

pub fn linear_lagrange() -> [Poly; 2] {
    [Poly(vec![0.5, -0.5]), Poly(vec![0.5, 0.5])]
}

pub fn quadratic_lagrange() -> [Poly; 3] {
    [Poly(vec![0.0, -0.5, 0.5]), Poly(vec![1.0, 0.0, -1.0]), Poly(vec![0.0, 0.5, 0.5])]
}

/// Tensor-product shape function `X(xi) Y(eta)` on an element of side `h`.
#[derive(Debug, Clone)]
pub struct Tensor {
    pub x: Poly,
    pub y: Poly,
}

impl Tensor {
    /// Physical derivative in direction `d` (0 = x, 1 = y).
    pub fn d(&self, d: usize, h: f64) -> Tensor {
        let s = 2.0 / h;
        if d == 0 {
            Tensor { x: Poly(self.x.deriv().0.iter().map(|c| c * s).collect()), y: self.y.clone() }
        } else {
            Tensor { x: self.x.clone(), y: Poly(self.y.deriv().0.iter().map(|c| c * s).collect()) }
        }
    }

    /// `int_e f g` over the physical element.
    pub fn inner(&self, o: &Tensor, h: f64) -> f64 {
        0.25 * h * h * self.x.mul(&o.x).integral() * self.y.mul(&o.y).integral()
    }
}

/// Q1 shape functions, counter-clockwise from the lower-left corner.
pub fn q1_shapes() -> Vec<Tensor> {
    let l = linear_lagrange();
    [[0, 0], [1, 0], [1, 1], [0, 1]]
        .iter()
        .map(|&[a, b]| Tensor { x: l[a].clone(), y: l[b].clone() })
        .collect()
}

/// Q2 shape functions in tensor order `a + 3 b`.
pub fn q2_shapes() -> Vec<Tensor> {
    let l = quadratic_lagrange();
    let mut out = Vec::new();
    for b in 0..3 {
        for a in 0..3 {
            out.push(Tensor { x: l[a].clone(), y: l[b].clone() });
        }
    }
    out
}

/// `{1, x - xc, y - yc}`.
pub fn p1disc_shapes(h: f64) -> Vec<Tensor> {
    let one = Poly(vec![1.0]);
    let lin = Poly(vec![0.0, 0.5 * h]);
    vec![
        Tensor { x: one.clone(), y: one.clone() },
        Tensor { x: lin.clone(), y: one.clone() },
        Tensor { x: one.clone(), y: lin },
    ]
}
