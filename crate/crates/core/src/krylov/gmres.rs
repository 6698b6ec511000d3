//! Right-preconditioned full GMRES (no restart).
//!
//! The Arnoldi basis is built with modified Gram-Schmidt plus one extra pass
//! whenever the new vector has lost orthogonality beyond `1e-8`. Residual norms
//! are those of the unpreconditioned system `b - A x`, which right
//! preconditioning exposes directly through the Givens-rotated Hessenberg
//! system.

use super::{dot, norm2, KrylovError, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub rel_tol: f64,
    /// Scale of the stopping test `|b - A x| <= rel_tol * ref_norm`.
    pub ref_norm: f64,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            rel_tol: 1e-6,
            ref_norm: 1.0,
            max_iter: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    RelativeTolerance,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresStats {
    /// Arnoldi steps taken, i.e. preconditioner applications.
    pub iterations: usize,
    /// `|b - A x_i|` for `i = 0..=iterations`.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub termination: Termination,
}

impl GmresStats {
    /// Zero iterations: the initial residual already meets the tolerance.
    pub fn converged_at_start(residual: f64) -> Self {
        GmresStats {
            iterations: 0,
            residual_history: vec![residual],
            converged: true,
            termination: Termination::RelativeTolerance,
        }
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history holds the initial residual")
    }
}

const ORTHOGONALITY_LOSS: f64 = 1e-8;

/// Solves `A x = b` with right preconditioner `M` (the operator applies an
/// approximation of `A^{-1}`), starting from `x0`.
pub fn gmres(
    a: &dyn LinearOperator,
    m_right: &dyn LinearOperator,
    b: &[f64],
    x0: &[f64],
    opts: &GmresOptions,
) -> Result<(Vec<f64>, GmresStats), KrylovError> {
    let n = a.dim();
    for len in [m_right.dim(), b.len(), x0.len()] {
        if len != n {
            return Err(KrylovError::Dimension { expected: n, found: len });
        }
    }
    if !(opts.ref_norm > 0.0) {
        return Err(KrylovError::InvalidReference(opts.ref_norm));
    }
    let target = opts.rel_tol * opts.ref_norm;

    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    a.apply(&x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let beta = norm2(&r);
    let mut history = vec![beta];
    if beta <= target {
        return Ok((
            x,
            GmresStats {
                iterations: 0,
                residual_history: history,
                converged: true,
                termination: Termination::RelativeTolerance,
            },
        ));
    }

    let m = opts.max_iter;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m.min(512) + 1);
    basis.push(r.iter().map(|v| v / beta).collect());
    // columns of the rotated Hessenberg matrix (upper triangular part)
    let mut rcols: Vec<Vec<f64>> = Vec::with_capacity(m.min(512));
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![beta];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut converged = false;
    let mut breakdown = false;

    for j in 0..m {
        m_right.apply(&basis[j], &mut z);
        a.apply(&z, &mut w);
        let w_norm0 = norm2(&w);

        let mut hcol = vec![0.0; j + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = dot(v, &w);
            hcol[i] = hij;
            w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= hij * vk);
        }
        let mut hnorm = norm2(&w);
        if hnorm > 0.0 {
            let loss = basis
                .iter()
                .map(|v| dot(v, &w).abs())
                .fold(0.0f64, f64::max)
                / hnorm;
            if loss > ORTHOGONALITY_LOSS {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    hcol[i] += c;
                    w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= c * vk);
                }
                hnorm = norm2(&w);
            }
        }
        hcol[j + 1] = hnorm;

        for i in 0..j {
            let t = cs[i] * hcol[i] + sn[i] * hcol[i + 1];
            hcol[i + 1] = -sn[i] * hcol[i] + cs[i] * hcol[i + 1];
            hcol[i] = t;
        }
        if hcol[j] == 0.0 && hcol[j + 1] == 0.0 {
            // A M v_j lies in the span of the previous basis with a zero
            // pivot: the residual cannot be reduced further.
            return Err(KrylovError::Breakdown {
                iteration: j + 1,
                residual: g[j].abs(),
            });
        }
        let (c, s) = givens(hcol[j], hcol[j + 1]);
        hcol[j] = c * hcol[j] + s * hcol[j + 1];
        hcol[j + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        let gj = g[j];
        g[j] = c * gj;
        g.push(-s * gj);
        hcol.truncate(j + 1);
        rcols.push(hcol);

        let res = g[j + 1].abs();
        history.push(res);

        if hnorm <= 1e-14 * w_norm0.max(f64::MIN_POSITIVE) {
            breakdown = true;
            converged = res <= target;
            break;
        }
        if res <= target {
            converged = true;
            break;
        }
        basis.push(w.iter().map(|v| v / hnorm).collect());
    }

    let k = rcols.len();
    // back substitution R y = g
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for l in i + 1..k {
            s -= rcols[l][i] * y[l];
        }
        let d = rcols[i][i];
        if d == 0.0 {
            return Err(KrylovError::Breakdown {
                iteration: i + 1,
                residual: history[k],
            });
        }
        y[i] = s / d;
    }
    let mut u = vec![0.0; n];
    for (yi, v) in y.iter().zip(&basis) {
        u.iter_mut().zip(v).for_each(|(uk, vk)| *uk += yi * vk);
    }
    m_right.apply(&u, &mut z);
    x.iter_mut().zip(&z).for_each(|(xk, zk)| *xk += zk);

    if breakdown && !converged {
        return Err(KrylovError::Breakdown {
            iteration: k,
            residual: history[k],
        });
    }
    let termination = if converged {
        Termination::RelativeTolerance
    } else {
        Termination::MaxIterations
    };
    Ok((
        x,
        GmresStats {
            iterations: k,
            residual_history: history,
            converged,
            termination,
        },
    ))
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}
