//! Element matrices on a square of side `h` with unit coefficients.
//!
//! Coefficients are piecewise constant, so callers scale the unit-weight
//! matrices by the element value of `rho`, `mu` or their reciprocals.

use super::basis::{Basis, Quadrature, ShapeValue};

/// Dense row-major element matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl LocalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        LocalMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn scaled(&self, s: f64) -> LocalMatrix {
        LocalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn transpose(&self) -> LocalMatrix {
        let mut t = LocalMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    pub fn max_abs_diff(&self, other: &LocalMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Shape values of `basis` at every quadrature point, with the physical
/// integration weight `w_q h^2 / 4`.
pub struct Tabulation {
    pub values: Vec<Vec<ShapeValue>>,
    pub weights: Vec<f64>,
}

impl Tabulation {
    pub fn new(basis: Basis, h: f64, quad: &Quadrature) -> Self {
        let jac = 0.25 * h * h;
        let values = quad
            .points()
            .iter()
            .map(|&[xi, eta]| basis.eval_vec(xi, eta, h))
            .collect();
        let weights = quad.weights().iter().map(|w| w * jac).collect();
        Tabulation { values, weights }
    }

    pub fn n(&self) -> usize {
        self.values[0].len()
    }
}

/// `int phi_i phi_j`.
pub fn mass(basis: Basis, h: f64, quad: &Quadrature) -> LocalMatrix {
    let t = Tabulation::new(basis, h, quad);
    let n = t.n();
    let mut m = LocalMatrix::zeros(n, n);
    for (vals, &w) in t.values.iter().zip(&t.weights) {
        for i in 0..n {
            for j in 0..n {
                m.add(i, j, w * vals[i].value * vals[j].value);
            }
        }
    }
    m
}

/// `int phi_i`.
pub fn moments(basis: Basis, h: f64, quad: &Quadrature) -> Vec<f64> {
    let t = Tabulation::new(basis, h, quad);
    let mut m = vec![0.0; t.n()];
    for (vals, &w) in t.values.iter().zip(&t.weights) {
        for (mi, v) in m.iter_mut().zip(vals) {
            *mi += w * v.value;
        }
    }
    m
}

/// Gradient blocks `[Kxx, Kxy, Kyx, Kyy]` with
/// `Kab[i][j] = int d_a phi_i d_b phi_j`.
pub fn gradient_blocks(basis: Basis, h: f64, quad: &Quadrature) -> [LocalMatrix; 4] {
    let t = Tabulation::new(basis, h, quad);
    let n = t.n();
    let mut k = [
        LocalMatrix::zeros(n, n),
        LocalMatrix::zeros(n, n),
        LocalMatrix::zeros(n, n),
        LocalMatrix::zeros(n, n),
    ];
    for (vals, &w) in t.values.iter().zip(&t.weights) {
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (vals[i], vals[j]);
                k[0].add(i, j, w * a.dx * b.dx);
                k[1].add(i, j, w * a.dx * b.dy);
                k[2].add(i, j, w * a.dy * b.dx);
                k[3].add(i, j, w * a.dy * b.dy);
            }
        }
    }
    k
}

/// `int grad phi_i . grad phi_j`.
pub fn laplacian(basis: Basis, h: f64, quad: &Quadrature) -> LocalMatrix {
    let [kxx, _, _, kyy] = gradient_blocks(basis, h, quad);
    let mut l = kxx;
    for (a, b) in l.data.iter_mut().zip(&kyy.data) {
        *a += b;
    }
    l
}

/// Symmetric-gradient viscous form `int 2 mu D(u) : D(v)` for both velocity
/// components, ordered `[x-components, y-components]`.
pub fn deformation(basis: Basis, h: f64, mu: f64, quad: &Quadrature) -> LocalMatrix {
    let [kxx, kxy, kyx, kyy] = gradient_blocks(basis, h, quad);
    let n = kxx.rows;
    let mut a = LocalMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            a.add(i, j, mu * (2.0 * kxx.get(i, j) + kyy.get(i, j)));
            a.add(i, n + j, mu * kyx.get(i, j));
            a.add(n + i, j, mu * kxy.get(i, j));
            a.add(n + i, n + j, mu * (kxx.get(i, j) + 2.0 * kyy.get(i, j)));
        }
    }
    a
}

/// Convection `int (w . grad phi_j) phi_i`.
pub fn convection(basis: Basis, wind_basis: Basis, wind: &[[f64; 2]], h: f64, quad: &Quadrature) -> LocalMatrix {
    let t = Tabulation::new(basis, h, quad);
    let tw = Tabulation::new(wind_basis, h, quad);
    convection_with(&t, &tw, wind)
}

/// Wind values at the quadrature points of a tabulation.
pub fn wind_with(tw: &Tabulation, wind: &[[f64; 2]]) -> Vec<[f64; 2]> {
    tw.values
        .iter()
        .map(|vals| {
            let mut w = [0.0, 0.0];
            for (c, s) in wind.iter().zip(vals) {
                w[0] += c[0] * s.value;
                w[1] += c[1] * s.value;
            }
            w
        })
        .collect()
}

/// Convection from pre-tabulated trial/test space `t` and wind space `tw`.
pub fn convection_with(t: &Tabulation, tw: &Tabulation, wind: &[[f64; 2]]) -> LocalMatrix {
    let winds = wind_with(tw, wind);
    let n = t.n();
    let mut c = LocalMatrix::zeros(n, n);
    for ((vals, &w), wq) in t.values.iter().zip(&t.weights).zip(&winds) {
        for j in 0..n {
            let adv = w * (wq[0] * vals[j].dx + wq[1] * vals[j].dy);
            for i in 0..n {
                c.add(i, j, adv * vals[i].value);
            }
        }
    }
    c
}

/// Streamline-diffusion term `delta int (w . grad phi_j)(w . grad phi_i)`.
pub fn streamline_diffusion_with(t: &Tabulation, tw: &Tabulation, wind: &[[f64; 2]], delta: f64) -> LocalMatrix {
    let winds = wind_with(tw, wind);
    let n = t.n();
    let mut s = LocalMatrix::zeros(n, n);
    for ((vals, &w), wq) in t.values.iter().zip(&t.weights).zip(&winds) {
        let adv: Vec<f64> = vals.iter().map(|v| wq[0] * v.dx + wq[1] * v.dy).collect();
        for i in 0..n {
            for j in 0..n {
                s.add(i, j, delta * w * adv[i] * adv[j]);
            }
        }
    }
    s
}

/// Divergence `B = [-int psi_i d_x phi_j | -int psi_i d_y phi_j]`.
pub fn divergence(pressure: Basis, velocity: Basis, h: f64, quad: &Quadrature) -> LocalMatrix {
    let tp = Tabulation::new(pressure, h, quad);
    let tv = Tabulation::new(velocity, h, quad);
    let (np, nv) = (tp.n(), tv.n());
    let mut b = LocalMatrix::zeros(np, 2 * nv);
    for q in 0..tp.weights.len() {
        let w = tp.weights[q];
        for i in 0..np {
            let psi = tp.values[q][i].value;
            for j in 0..nv {
                let g = tv.values[q][j];
                b.add(i, j, -w * psi * g.dx);
                b.add(i, nv + j, -w * psi * g.dy);
            }
        }
    }
    b
}

/// Local projection stabilisation for equal-order bilinears,
/// `mu^{-1} (M_e - m m^T / |e|)` with `m_i = int psi_i`.
pub fn stabilization(h: f64, mu: f64, quad: &Quadrature) -> LocalMatrix {
    let mut c = mass(Basis::Q1, h, quad);
    let m = moments(Basis::Q1, h, quad);
    let area = h * h;
    for i in 0..4 {
        for j in 0..4 {
            c.data[i * 4 + j] -= m[i] * m[j] / area;
        }
    }
    c.scaled(1.0 / mu)
}
