//! Structured cavity mesh, two-phase coefficient field and mixed-element
//! degree-of-freedom maps.
//!
//! The domain is `(-1, 1)^2` split into `n x n` square elements, numbered
//! row-major from the lower-left corner. The inner square `(-1/2, 1/2)^2` holds
//! the second phase; `n` must be a multiple of four so that the interface lies
//! on element edges.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("elements per side must be a positive multiple of 4 so the interface is edge-aligned (got {0})")]
    Alignment(usize),
    #[error("{name} must be strictly positive (got {value})")]
    Domain { name: &'static str, value: f64 },
    #[error("grid size h = {0} does not divide the side length 2 into a whole number of elements")]
    GridSize(f64),
}

/// Phase label of an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Outer fluid, `rho = 1`, `mu = 1/Re`.
    One,
    /// Inner fluid occupying `(-1/2, 1/2)^2`.
    Two,
}

impl Phase {
    pub fn index(self) -> u8 {
        match self {
            Phase::One => 1,
            Phase::Two => 2,
        }
    }
}

/// Structured square-element mesh of `(-1, 1)^2` with piecewise-constant
/// density and viscosity.
#[derive(Debug, Clone)]
pub struct PhaseGrid {
    n_per_side: usize,
    h: f64,
    elem_phase: Vec<Phase>,
    rho: Vec<f64>,
    mu: Vec<f64>,
    reynolds: f64,
    rho_ratio: f64,
    mu_ratio: f64,
}

/// Builds the two-phase cavity grid.
///
/// Phase one has `rho = 1, mu = 1/Re`; phase two has `rho = rho_ratio` and
/// `mu = mu_ratio / Re`. Phase membership is decided by the element centroid.
pub fn build_grid(
    n_per_side: usize,
    rho_ratio: f64,
    mu_ratio: f64,
    reynolds: f64,
) -> Result<PhaseGrid, GridError> {
    if n_per_side == 0 || n_per_side % 4 != 0 {
        return Err(GridError::Alignment(n_per_side));
    }
    for (name, value) in [
        ("rho_ratio", rho_ratio),
        ("mu_ratio", mu_ratio),
        ("reynolds", reynolds),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(GridError::Domain { name, value });
        }
    }
    let h = 2.0 / n_per_side as f64;
    let n_elem = n_per_side * n_per_side;
    let mut elem_phase = Vec::with_capacity(n_elem);
    let mut rho = Vec::with_capacity(n_elem);
    let mut mu = Vec::with_capacity(n_elem);
    for e in 0..n_elem {
        let (xc, yc) = centroid(n_per_side, h, e);
        let inner = xc.abs() < 0.5 && yc.abs() < 0.5;
        if inner {
            elem_phase.push(Phase::Two);
            rho.push(rho_ratio);
            mu.push(mu_ratio / reynolds);
        } else {
            elem_phase.push(Phase::One);
            rho.push(1.0);
            mu.push(1.0 / reynolds);
        }
    }
    Ok(PhaseGrid {
        n_per_side,
        h,
        elem_phase,
        rho,
        mu,
        reynolds,
        rho_ratio,
        mu_ratio,
    })
}

/// Converts a grid size `h` to the number of elements per side, `2/h`.
pub fn elements_per_side(h: f64) -> Result<usize, GridError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(GridError::GridSize(h));
    }
    let n = (2.0 / h).round();
    if n < 1.0 || ((n * h) - 2.0).abs() > 1e-9 {
        return Err(GridError::GridSize(h));
    }
    Ok(n as usize)
}

fn centroid(n: usize, h: f64, e: usize) -> (f64, f64) {
    let (i, j) = (e % n, e / n);
    (-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h)
}

impl PhaseGrid {
    /// Single-phase grid with constant coefficients and no alignment
    /// requirement. Every element is labelled phase one.
    pub fn uniform(n_per_side: usize, rho: f64, mu: f64) -> Result<PhaseGrid, GridError> {
        if n_per_side == 0 {
            return Err(GridError::Alignment(n_per_side));
        }
        for (name, value) in [("rho", rho), ("mu", mu)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(GridError::Domain { name, value });
            }
        }
        let n_elem = n_per_side * n_per_side;
        Ok(PhaseGrid {
            n_per_side,
            h: 2.0 / n_per_side as f64,
            elem_phase: vec![Phase::One; n_elem],
            rho: vec![rho; n_elem],
            mu: vec![mu; n_elem],
            reynolds: 1.0 / mu,
            rho_ratio: 1.0,
            mu_ratio: 1.0,
        })
    }

    pub fn n_per_side(&self) -> usize {
        self.n_per_side
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_elements(&self) -> usize {
        self.n_per_side * self.n_per_side
    }

    pub fn phase(&self, e: usize) -> Phase {
        self.elem_phase[e]
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn reynolds(&self) -> f64 {
        self.reynolds
    }

    pub fn rho_ratio(&self) -> f64 {
        self.rho_ratio
    }

    pub fn mu_ratio(&self) -> f64 {
        self.mu_ratio
    }

    /// Viscosity of the outer fluid, `1/Re`.
    pub fn reference_viscosity(&self) -> f64 {
        1.0 / self.reynolds
    }

    /// `(i, j)` column/row of element `e`.
    pub fn element_ij(&self, e: usize) -> (usize, usize) {
        (e % self.n_per_side, e / self.n_per_side)
    }

    pub fn element_centroid(&self, e: usize) -> (f64, f64) {
        centroid(self.n_per_side, self.h, e)
    }

    /// Neighbouring element across each edge, ordered `[+x, -x, +y, -y]`.
    pub fn neighbours(&self, e: usize) -> [Option<usize>; 4] {
        let n = self.n_per_side;
        let (i, j) = self.element_ij(e);
        [
            (i + 1 < n).then(|| e + 1),
            (i > 0).then(|| e - 1),
            (j + 1 < n).then(|| e + n),
            (j > 0).then(|| e - n),
        ]
    }

    /// Total area occupied by a phase.
    pub fn phase_area(&self, phase: Phase) -> f64 {
        let count = self.elem_phase.iter().filter(|&&p| p == phase).count();
        count as f64 * self.h * self.h
    }

    /// `sum_e rho_e |e|`, the integral of the density over the domain.
    pub fn integral_of_rho(&self) -> f64 {
        self.rho.iter().sum::<f64>() * self.h * self.h
    }
}

/// Mixed finite element pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementPair {
    /// Biquadratic velocity, continuous bilinear pressure.
    Q2Q1,
    /// Equal-order bilinear pair, stabilised.
    Q1Q1,
    /// Biquadratic velocity, discontinuous linear pressure.
    Q2Pm1,
}

impl ElementPair {
    pub const ALL: [ElementPair; 3] = [ElementPair::Q2Q1, ElementPair::Q1Q1, ElementPair::Q2Pm1];

    pub fn key(self) -> &'static str {
        match self {
            ElementPair::Q2Q1 => "q2q1",
            ElementPair::Q1Q1 => "q1q1",
            ElementPair::Q2Pm1 => "q2pm1",
        }
    }

    pub fn quadratic_velocity(self) -> bool {
        !matches!(self, ElementPair::Q1Q1)
    }

    pub fn continuous_pressure(self) -> bool {
        !matches!(self, ElementPair::Q2Pm1)
    }

    /// Whether the pair needs the pressure stabilisation matrix `C`.
    pub fn is_stabilised(self) -> bool {
        matches!(self, ElementPair::Q1Q1)
    }

    /// Closed-form total DOF count (interior velocity plus all pressure DOFs)
    /// for `n` elements per side.
    pub fn total_dofs(self, n_per_side: usize) -> usize {
        let n = n_per_side;
        match self {
            ElementPair::Q2Q1 => 2 * (2 * n - 1).pow(2) + (n + 1).pow(2),
            ElementPair::Q1Q1 => 2 * (n - 1).pow(2) + (n + 1).pow(2),
            ElementPair::Q2Pm1 => 2 * (2 * n - 1).pow(2) + 3 * n * n,
        }
    }
}

impl fmt::Display for ElementPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ElementPair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "q2q1" | "q2-q1" => Ok(ElementPair::Q2Q1),
            "q1q1" | "q1-q1" => Ok(ElementPair::Q1Q1),
            "q2pm1" | "q2-pm1" | "q2p1" | "q2-p-1" => Ok(ElementPair::Q2Pm1),
            other => Err(format!("unknown element pair `{other}` (expected q2q1, q1q1 or q2pm1)")),
        }
    }
}

/// Degree-of-freedom layout of a mixed discretisation.
///
/// Velocity nodes cover the whole closed domain; boundary nodes carry
/// prescribed values and are eliminated from the solved system. Solved
/// velocity unknowns are numbered x-components of the free nodes first, then
/// y-components. Q2-P-1 pressure DOFs are per-element triples
/// `(centroid value, x-slope, y-slope)` for the basis `{1, x - xc, y - yc}`.
#[derive(Debug, Clone)]
pub struct MixedDiscretization {
    pair: ElementPair,
    n_per_side: usize,
    h: f64,
    vel_coords: Vec<[f64; 2]>,
    /// Free index of each velocity node, `None` for Dirichlet nodes.
    node_to_free: Vec<Option<usize>>,
    free_nodes: Vec<usize>,
    dirichlet_nodes: Vec<usize>,
    elem_vel_nodes: Vec<Vec<usize>>,
    pre_coords: Vec<[f64; 2]>,
    elem_pre_dofs: Vec<Vec<usize>>,
}

pub fn build_discretization(grid: &PhaseGrid, pair: ElementPair) -> MixedDiscretization {
    let n = grid.n_per_side();
    let h = grid.h();
    // nodes per side of the velocity lattice and the lattice spacing
    let (m, step) = if pair.quadratic_velocity() {
        (2 * n + 1, h / 2.0)
    } else {
        (n + 1, h)
    };
    let mut vel_coords = Vec::with_capacity(m * m);
    let mut node_to_free = Vec::with_capacity(m * m);
    let mut free_nodes = Vec::new();
    let mut dirichlet_nodes = Vec::new();
    for b in 0..m {
        for a in 0..m {
            let idx = b * m + a;
            vel_coords.push([-1.0 + a as f64 * step, -1.0 + b as f64 * step]);
            let boundary = a == 0 || b == 0 || a == m - 1 || b == m - 1;
            if boundary {
                node_to_free.push(None);
                dirichlet_nodes.push(idx);
            } else {
                node_to_free.push(Some(free_nodes.len()));
                free_nodes.push(idx);
            }
        }
    }

    let mut elem_vel_nodes = Vec::with_capacity(n * n);
    for e in 0..n * n {
        let (i, j) = grid.element_ij(e);
        if pair.quadratic_velocity() {
            // local tensor order: node (a, b) -> a + 3 b
            let mut nodes = Vec::with_capacity(9);
            for b in 0..3 {
                for a in 0..3 {
                    nodes.push((2 * j + b) * m + 2 * i + a);
                }
            }
            elem_vel_nodes.push(nodes);
        } else {
            // counter-clockwise from the lower-left corner
            let ll = j * m + i;
            elem_vel_nodes.push(vec![ll, ll + 1, ll + m + 1, ll + m]);
        }
    }

    let mut pre_coords = Vec::new();
    let mut elem_pre_dofs = Vec::with_capacity(n * n);
    if pair.continuous_pressure() {
        let mp = n + 1;
        for b in 0..mp {
            for a in 0..mp {
                pre_coords.push([-1.0 + a as f64 * h, -1.0 + b as f64 * h]);
            }
        }
        for e in 0..n * n {
            let (i, j) = grid.element_ij(e);
            let ll = j * mp + i;
            elem_pre_dofs.push(vec![ll, ll + 1, ll + mp + 1, ll + mp]);
        }
    } else {
        for e in 0..n * n {
            let (xc, yc) = grid.element_centroid(e);
            for _ in 0..3 {
                pre_coords.push([xc, yc]);
            }
            elem_pre_dofs.push(vec![3 * e, 3 * e + 1, 3 * e + 2]);
        }
    }

    MixedDiscretization {
        pair,
        n_per_side: n,
        h,
        vel_coords,
        node_to_free,
        free_nodes,
        dirichlet_nodes,
        elem_vel_nodes,
        pre_coords,
        elem_pre_dofs,
    }
}

/// Regularised lid profile `(1 - x^4, 0)` on `y = 1`.
pub fn lid_values(x: f64) -> [f64; 2] {
    [1.0 - x.powi(4), 0.0]
}

impl MixedDiscretization {
    pub fn pair(&self) -> ElementPair {
        self.pair
    }

    pub fn n_per_side(&self) -> usize {
        self.n_per_side
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of velocity nodes including boundary nodes.
    pub fn n_vel_nodes(&self) -> usize {
        self.vel_coords.len()
    }

    pub fn n_free_nodes(&self) -> usize {
        self.free_nodes.len()
    }

    /// Solved velocity unknowns (both components, boundary eliminated).
    pub fn n_vel_dofs(&self) -> usize {
        2 * self.free_nodes.len()
    }

    pub fn n_pre_dofs(&self) -> usize {
        self.pre_coords.len()
    }

    pub fn total_dofs(&self) -> usize {
        self.n_vel_dofs() + self.n_pre_dofs()
    }

    pub fn vel_coords(&self) -> &[[f64; 2]] {
        &self.vel_coords
    }

    pub fn pre_coords(&self) -> &[[f64; 2]] {
        &self.pre_coords
    }

    pub fn node_to_free(&self) -> &[Option<usize>] {
        &self.node_to_free
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free_nodes
    }

    /// Velocity nodes on the boundary; both components are prescribed.
    pub fn dirichlet_nodes(&self) -> &[usize] {
        &self.dirichlet_nodes
    }

    pub fn elem_vel_nodes(&self, e: usize) -> &[usize] {
        &self.elem_vel_nodes[e]
    }

    pub fn elem_pre_dofs(&self, e: usize) -> &[usize] {
        &self.elem_pre_dofs[e]
    }

    /// Prescribed velocity at every node: the lid profile on `y = 1`, zero on
    /// the other walls and at interior nodes.
    pub fn boundary_values(&self, lid_scale: f64) -> VelocityField {
        let mut field = VelocityField::zeros(self.n_vel_nodes());
        for &node in &self.dirichlet_nodes {
            let [x, y] = self.vel_coords[node];
            if (y - 1.0).abs() < 1e-12 {
                let [ux, uy] = lid_values(x);
                field.ux[node] = lid_scale * ux;
                field.uy[node] = lid_scale * uy;
            }
        }
        field
    }

    /// Coefficient vector of the constant pressure `p = 1`, which spans the
    /// pressure null space of the enclosed-flow system.
    pub fn constant_pressure_mode(&self) -> Vec<f64> {
        if self.pair.continuous_pressure() {
            vec![1.0; self.n_pre_dofs()]
        } else {
            (0..self.n_pre_dofs())
                .map(|k| if k % 3 == 0 { 1.0 } else { 0.0 })
                .collect()
        }
    }

    /// Full nodal field from solved interior velocities and boundary values.
    pub fn expand_velocity(&self, u_free: &[f64], boundary: &VelocityField) -> VelocityField {
        let nf = self.n_free_nodes();
        assert_eq!(u_free.len(), 2 * nf, "velocity vector length");
        let mut field = boundary.clone();
        for (f, &node) in self.free_nodes.iter().enumerate() {
            field.ux[node] = u_free[f];
            field.uy[node] = u_free[nf + f];
        }
        field
    }

    /// Interior components of a nodal field, in solved-unknown order.
    pub fn restrict_velocity(&self, field: &VelocityField) -> Vec<f64> {
        let nf = self.n_free_nodes();
        let mut out = vec![0.0; 2 * nf];
        for (f, &node) in self.free_nodes.iter().enumerate() {
            out[f] = field.ux[node];
            out[nf + f] = field.uy[node];
        }
        out
    }
}

/// Nodal velocity coefficients on every velocity node, boundary included.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
}

impl VelocityField {
    pub fn zeros(n_nodes: usize) -> Self {
        VelocityField {
            ux: vec![0.0; n_nodes],
            uy: vec![0.0; n_nodes],
        }
    }

    pub fn constant(n_nodes: usize, value: [f64; 2]) -> Self {
        VelocityField {
            ux: vec![value[0]; n_nodes],
            uy: vec![value[1]; n_nodes],
        }
    }

    pub fn len(&self) -> usize {
        self.ux.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ux.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.ux.iter().chain(&self.uy).all(|&v| v == 0.0)
    }

    /// Components stacked `[ux; uy]`.
    pub fn stacked(&self) -> Vec<f64> {
        self.ux.iter().chain(&self.uy).copied().collect()
    }
}
