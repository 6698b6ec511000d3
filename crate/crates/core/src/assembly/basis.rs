//! Reference-square quadrature and shape functions.
//!
//! Reference coordinates `(xi, eta)` live in `[-1, 1]^2`; a square element of
//! side `h` maps affinely with Jacobian `h/2 I`.

/// Tensor-product Gauss-Legendre rule on the reference square.
#[derive(Debug, Clone)]
pub struct Quadrature {
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

/// Gauss-Legendre points and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    match n {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (3.0f64 / 5.0).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let s = (6.0f64 / 5.0).sqrt();
            let a = ((3.0 - 2.0 * s) / 7.0).sqrt();
            let b = ((3.0 + 2.0 * s) / 7.0).sqrt();
            let wa = (18.0 + 30f64.sqrt()) / 36.0;
            let wb = (18.0 - 30f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        _ => panic!("Gauss-Legendre rule with {n} points is not tabulated"),
    }
}

impl Quadrature {
    /// `n x n` Gauss rule, exact for polynomials of degree `2n - 1` per variable.
    pub fn gauss(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (j, &yj) in x.iter().enumerate() {
            for (i, &xi) in x.iter().enumerate() {
                points.push([xi, yj]);
                weights.push(w[i] * w[j]);
            }
        }
        Quadrature { points, weights }
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::gauss(3)
    }
}

/// Shape function value and physical gradient at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ShapeValue {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
}

/// Local basis on a square element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Bilinear, nodes counter-clockwise from the lower-left corner.
    Q1,
    /// Biquadratic, nodes in tensor order `a + 3 b` with `a, b in {0, 1, 2}`.
    Q2,
    /// Discontinuous linear `{1, x - xc, y - yc}`.
    P1Disc,
}

const Q1_NODES: [[usize; 2]; 4] = [[0, 0], [1, 0], [1, 1], [0, 1]];

fn lagrange1(k: usize, t: f64) -> (f64, f64) {
    match k {
        0 => (0.5 * (1.0 - t), -0.5),
        _ => (0.5 * (1.0 + t), 0.5),
    }
}

fn lagrange2(k: usize, t: f64) -> (f64, f64) {
    match k {
        0 => (0.5 * t * (t - 1.0), t - 0.5),
        1 => (1.0 - t * t, -2.0 * t),
        _ => (0.5 * t * (t + 1.0), t + 0.5),
    }
}

impl Basis {
    pub fn len(self) -> usize {
        match self {
            Basis::Q1 => 4,
            Basis::Q2 => 9,
            Basis::P1Disc => 3,
        }
    }

    /// Values and physical gradients at reference point `(xi, eta)` of an
    /// element of side `h`.
    pub fn eval(self, xi: f64, eta: f64, h: f64, out: &mut [ShapeValue]) {
        let s = 2.0 / h;
        match self {
            Basis::Q1 => {
                for (k, &[a, b]) in Q1_NODES.iter().enumerate() {
                    let (fx, dfx) = lagrange1(a, xi);
                    let (fy, dfy) = lagrange1(b, eta);
                    out[k] = ShapeValue {
                        value: fx * fy,
                        dx: s * dfx * fy,
                        dy: s * fx * dfy,
                    };
                }
            }
            Basis::Q2 => {
                for b in 0..3 {
                    let (fy, dfy) = lagrange2(b, eta);
                    for a in 0..3 {
                        let (fx, dfx) = lagrange2(a, xi);
                        out[a + 3 * b] = ShapeValue {
                            value: fx * fy,
                            dx: s * dfx * fy,
                            dy: s * fx * dfy,
                        };
                    }
                }
            }
            Basis::P1Disc => {
                out[0] = ShapeValue {
                    value: 1.0,
                    dx: 0.0,
                    dy: 0.0,
                };
                out[1] = ShapeValue {
                    value: 0.5 * h * xi,
                    dx: 1.0,
                    dy: 0.0,
                };
                out[2] = ShapeValue {
                    value: 0.5 * h * eta,
                    dx: 0.0,
                    dy: 1.0,
                };
            }
        }
    }

    pub fn eval_vec(self, xi: f64, eta: f64, h: f64) -> Vec<ShapeValue> {
        let mut out = vec![ShapeValue::default(); self.len()];
        self.eval(xi, eta, h, &mut out);
        out
    }
}
