//! Dense diagnostics for small grids.

use crate::assembly::{OseenAssembly, PressureOperators, Weight};
use crate::grid::VelocityField;
use crate::krylov::{sparse_factorize, CsrMatrix, KrylovError};

use super::{build_fp, PressureConvection};
use crate::assembly::SaddleSystem;

/// `B F^{-1} B^T + C`, formed column by column (dense pattern).
pub fn exact_schur_complement(system: &SaddleSystem) -> Result<CsrMatrix, KrylovError> {
    let f = sparse_factorize(&system.f)?;
    let (nv, np) = (system.n_vel(), system.n_pre());
    let mut t = Vec::with_capacity(np * np);
    let mut col = vec![0.0; nv];
    for j in 0..np {
        col.iter_mut().for_each(|v| *v = 0.0);
        for (k, v) in system.b.row(j) {
            col[k] = v;
        }
        f.solve_in_place(&mut col);
        let mut s = system.b.mul_vec(&col);
        for (i, v) in system.c.row(j) {
            // C is symmetric: column j equals row j
            s[i] += v;
        }
        t.extend(s.into_iter().enumerate().map(|(i, v)| (i, j, v)));
    }
    Ok(CsrMatrix::from_triplets(np, np, &t))
}

/// Frobenius norm of the discrete commutator
/// `(M_p^{-1} B)(M^{-1} F) - (M_p^{-1} F_p)(M_p^{-1} B)` for the system
/// linearised about `wind`, with unit-weight mass matrices.
pub fn commutator_norm(assembly: &OseenAssembly, wind: &VelocityField) -> Result<f64, KrylovError> {
    let boundary = VelocityField::zeros(assembly.discretization().n_vel_nodes());
    let system = assembly.system(wind, &boundary);
    let ops = PressureOperators::new(assembly);
    let conv = PressureConvection::assemble(assembly, wind);
    let fp = build_fp(&ops, &conv, system.mass_shift(), true);
    commutator_from(&system.b, &system.f, &fp, &assembly.interior_velocity_mass(Weight::One), &ops.mp_one)
}

/// Commutator norm from explicit operators.
pub fn commutator_from(
    b: &CsrMatrix,
    f: &CsrMatrix,
    fp: &CsrMatrix,
    m: &CsrMatrix,
    mp: &CsrMatrix,
) -> Result<f64, KrylovError> {
    let m_lu = sparse_factorize(m)?;
    let mp_lu = sparse_factorize(mp)?;
    let (np, nv) = (b.nrows(), b.ncols());
    let ft = f.transpose();
    let bt = b.transpose();
    let fpt = fp.transpose();
    // D = B M^{-1} F - F_p M_p^{-1} B, row by row
    let mut d = vec![vec![0.0; nv]; np];
    let mut e = vec![0.0; np];
    for (i, row) in d.iter_mut().enumerate() {
        let mut bi = vec![0.0; nv];
        for (k, v) in b.row(i) {
            bi[k] = v;
        }
        m_lu.solve_in_place(&mut bi);
        let x = ft.mul_vec(&bi);
        e.iter_mut().for_each(|v| *v = 0.0);
        for (k, v) in fpt.row(i) {
            e[k] = v;
        }
        mp_lu.solve_in_place(&mut e);
        let y = bt.mul_vec(&e);
        for ((r, a), c) in row.iter_mut().zip(&x).zip(&y) {
            *r = a - c;
        }
    }
    // E = M_p^{-1} D, column by column
    let mut total = 0.0;
    let mut col = vec![0.0; np];
    for j in 0..nv {
        for i in 0..np {
            col[i] = d[i][j];
        }
        mp_lu.solve_in_place(&mut col);
        total += col.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(total.sqrt())
}
