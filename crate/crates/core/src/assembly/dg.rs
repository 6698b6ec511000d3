//! Pressure-space operators for the discontinuous linear pressure.
//!
//! DOFs per element are `(p_c, s_x, s_y)` for `p = p_c + s_x (x - xc) + s_y (y - yc)`.
//! The Laplacian splits into a cell-centred five-point block on the centroid
//! values (zero-flux at the walls) and a slope block made of the element-local
//! gradient term plus a penalty on the jump of the slope part across interior
//! edges. Edge coefficients use the harmonic mean of the two element weights.
//! Convection is upwinded: `int_K (w . grad p) q` plus the inflow jump term
//! `-int_{inflow} (w . n)(p_int - p_ext) q_int` on interior edges.

use crate::grid::{MixedDiscretization, PhaseGrid, VelocityField};
use crate::krylov::CsrMatrix;

use super::basis::{gauss_legendre, Basis, ShapeValue};
use super::element::{convection_with, Tabulation};

pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Weighted DG Laplacian; `weights[e]` is the element coefficient.
pub fn laplacian(grid: &PhaseGrid, weights: &[f64]) -> CsrMatrix {
    let n_el = grid.n_elements();
    let h2 = grid.h() * grid.h();
    let mut t = Vec::with_capacity(n_el * 14);
    for e in 0..n_el {
        t.push((3 * e + 1, 3 * e + 1, weights[e] * h2));
        t.push((3 * e + 2, 3 * e + 2, weights[e] * h2));
        let nb = grid.neighbours(e);
        // +x and +y edges visit every interior edge once
        for (dir, other) in [(0usize, nb[0]), (1, nb[2])] {
            let Some(f) = other else { continue };
            let c = harmonic_mean(weights[e], weights[f]);
            let (a, b) = (3 * e, 3 * f);
            t.push((a, a, c));
            t.push((b, b, c));
            t.push((a, b, -c));
            t.push((b, a, -c));
            // normal slope: jump (h/2)(s_a + s_b); tangential: (y - yc)(s_a - s_b)
            let (normal, tangential) = if dir == 0 { (1, 2) } else { (2, 1) };
            let kn = c * h2 / 4.0;
            t.push((a + normal, a + normal, kn));
            t.push((b + normal, b + normal, kn));
            t.push((a + normal, b + normal, kn));
            t.push((b + normal, a + normal, kn));
            let kt = c * h2 / 12.0;
            t.push((a + tangential, a + tangential, kt));
            t.push((b + tangential, b + tangential, kt));
            t.push((a + tangential, b + tangential, -kt));
            t.push((b + tangential, a + tangential, -kt));
        }
    }
    CsrMatrix::from_triplets(3 * n_el, 3 * n_el, &t)
}

/// Reference coordinates of edge point `g` on edge `k` (ordered `+x, -x, +y, -y`),
/// and the outward unit normal.
fn edge_point(k: usize, g: f64) -> ([f64; 2], [f64; 2]) {
    match k {
        0 => ([1.0, g], [1.0, 0.0]),
        1 => ([-1.0, g], [-1.0, 0.0]),
        2 => ([g, 1.0], [0.0, 1.0]),
        _ => ([g, -1.0], [0.0, -1.0]),
    }
}

/// The same physical point seen from the neighbour across edge `k`.
fn mirrored(k: usize, p: [f64; 2]) -> [f64; 2] {
    match k {
        0 | 1 => [-p[0], p[1]],
        _ => [p[0], -p[1]],
    }
}

/// Upwind DG convection for the wind `wind`, scaled per element by `weights`.
pub fn convection(
    disc: &MixedDiscretization,
    grid: &PhaseGrid,
    vel_basis: Basis,
    tab_p: &Tabulation,
    tab_v: &Tabulation,
    wind: &VelocityField,
    weights: &[f64],
) -> CsrMatrix {
    let n_el = grid.n_elements();
    let h = grid.h();
    let (gp, gw) = gauss_legendre(3);
    let nv = vel_basis.len();
    let mut coeffs = vec![[0.0; 2]; nv];
    let mut vbuf = vec![ShapeValue::default(); nv];
    let mut pin = [ShapeValue::default(); 3];
    let mut pout = [ShapeValue::default(); 3];
    let mut t = Vec::with_capacity(n_el * 45);
    for e in 0..n_el {
        let nodes = disc.elem_vel_nodes(e);
        for (c, &node) in coeffs.iter_mut().zip(nodes) {
            *c = [wind.ux[node], wind.uy[node]];
        }
        let vol = convection_with(tab_p, tab_v, &coeffs);
        let we = weights[e];
        for i in 0..3 {
            for j in 0..3 {
                t.push((3 * e + i, 3 * e + j, we * vol.get(i, j)));
            }
        }
        for (k, nb) in grid.neighbours(e).into_iter().enumerate() {
            let Some(f) = nb else { continue };
            let mut own = [[0.0; 3]; 3];
            let mut ext = [[0.0; 3]; 3];
            for (&g, &w) in gp.iter().zip(&gw) {
                let (p, normal) = edge_point(k, g);
                vel_basis.eval(p[0], p[1], h, &mut vbuf);
                let mut wn = 0.0;
                for (c, s) in coeffs.iter().zip(&vbuf) {
                    wn += (c[0] * normal[0] + c[1] * normal[1]) * s.value;
                }
                if wn >= 0.0 {
                    continue;
                }
                Basis::P1Disc.eval(p[0], p[1], h, &mut pin);
                let q = mirrored(k, p);
                Basis::P1Disc.eval(q[0], q[1], h, &mut pout);
                let s = 0.5 * h * w * wn;
                for i in 0..3 {
                    for j in 0..3 {
                        own[i][j] -= s * pin[j].value * pin[i].value;
                        ext[i][j] += s * pout[j].value * pin[i].value;
                    }
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    t.push((3 * e + i, 3 * e + j, we * own[i][j]));
                    t.push((3 * e + i, 3 * f + j, we * ext[i][j]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(3 * n_el, 3 * n_el, &t)
}
