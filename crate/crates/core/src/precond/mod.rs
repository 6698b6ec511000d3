//! Block-triangular preconditioner and Schur-complement approximations.
//!
//! The preconditioner is `P = [F B^T; 0 -S]` with `S ~ B F^{-1} B^T + C`.
//! Every strategy returns an approximation of `S^{-1} v`; with the default
//! [`NullspaceMode::Project`] the constant-pressure mode is removed from the
//! right-hand side of each singular sub-solve and from every result.

mod dense;
mod solvers;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::assembly::{OseenAssembly, PressureOperators, SaddleSystem, Weight};
use crate::grid::VelocityField;
use crate::krylov::{sparse_factorize_with, CsrMatrix, KrylovError, LinearOperator, LuPattern, SparseLu};

pub use dense::{commutator_from, commutator_norm, exact_schur_complement};
pub use solvers::{project_out, MassSolve, MassSolveKind, NullspaceMode, SingularSolve};

#[derive(Debug, Error)]
pub enum PrecondError {
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Krylov(#[from] KrylovError),
}

/// Schur-complement approximation, selected by string key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchurKind {
    /// Single-phase PCD `A_p^{-1} F_p M_p^{-1}`.
    Pcd,
    /// Cahouet-Chabard `mu_ref M_p^{-1} + (alpha/dt) A_p^{-1}`.
    Cc,
    /// Two-phase Cahouet-Chabard `M_p[1/2mu]^{-1} + (alpha/dt) A_p[1/rho]^{-1}`.
    Gcc,
    /// `A_p[mu]^{-1} F_p M_p[1/2mu]^{-1}`.
    PcdVisc,
    /// Two-phase PCD with density-weighted convection and mass.
    Pcd2Rho,
    /// Two-phase PCD.
    Pcd2,
    /// Least-squares commutator with `diag(M)` scaling.
    Lsc,
    /// LSC scaled by the row maxima of `|F|`.
    LscD,
    /// Two-phase LSC scaled by `diag(M[mu])`.
    Lsc2,
    /// `(B diag(F)^{-1} B^T + C)^{-1}`.
    Simple,
    /// Dense `(B F^{-1} B^T + C)^{-1}`; small grids only.
    Exact,
}

impl SchurKind {
    pub const ALL: [SchurKind; 11] = [
        SchurKind::Pcd,
        SchurKind::Cc,
        SchurKind::Gcc,
        SchurKind::PcdVisc,
        SchurKind::Pcd2Rho,
        SchurKind::Pcd2,
        SchurKind::Lsc,
        SchurKind::LscD,
        SchurKind::Lsc2,
        SchurKind::Simple,
        SchurKind::Exact,
    ];

    pub fn key(self) -> &'static str {
        match self {
            SchurKind::Pcd => "pcd",
            SchurKind::Cc => "cc",
            SchurKind::Gcc => "gcc",
            SchurKind::PcdVisc => "pcd-visc",
            SchurKind::Pcd2Rho => "pcd2-rho",
            SchurKind::Pcd2 => "pcd2",
            SchurKind::Lsc => "lsc",
            SchurKind::LscD => "lsc-d",
            SchurKind::Lsc2 => "lsc2",
            SchurKind::Simple => "simple",
            SchurKind::Exact => "exact",
        }
    }

    pub fn is_lsc(self) -> bool {
        matches!(self, SchurKind::Lsc | SchurKind::LscD | SchurKind::Lsc2)
    }
}

impl fmt::Display for SchurKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for SchurKind {
    type Err = PrecondError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        SchurKind::ALL
            .into_iter()
            .find(|k| k.key() == norm)
            .ok_or_else(|| {
                let keys: Vec<_> = SchurKind::ALL.iter().map(|k| k.key()).collect();
                PrecondError::Unsupported(format!("unknown preconditioner '{s}' (expected one of {})", keys.join(", ")))
            })
    }
}

/// Diagonal used by LSC_D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LscScaling {
    /// `D_ii = max_j |F_ij|`.
    #[default]
    RowMax,
    /// `D = diag(F)`.
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchurOptions {
    pub mass_solve: MassSolveKind,
    pub lsc_d_scaling: LscScaling,
    /// Keep the `1/(2 mu)` weight in the two-phase PCD mass term; `false`
    /// uses `1/mu`.
    pub factor_two: bool,
    pub nullspace: NullspaceMode,
    /// Largest pressure space for which the dense exact Schur complement is
    /// formed.
    pub max_exact_dofs: usize,
}

impl Default for SchurOptions {
    fn default() -> Self {
        SchurOptions {
            mass_solve: MassSolveKind::Exact,
            lsc_d_scaling: LscScaling::RowMax,
            factor_two: true,
            nullspace: NullspaceMode::Project,
            max_exact_dofs: 4000,
        }
    }
}

/// Pressure convection matrices for one wind.
#[derive(Debug, Clone)]
pub struct PressureConvection {
    pub n_one: CsrMatrix,
    pub n_rho: CsrMatrix,
}

impl PressureConvection {
    pub fn assemble(assembly: &OseenAssembly, wind: &VelocityField) -> Self {
        let asm = assembly.assembler();
        PressureConvection {
            n_one: asm.pressure_convection(wind, Weight::One),
            n_rho: asm.pressure_convection(wind, Weight::Rho),
        }
    }
}

/// `F_p = A_p[mu] + N_p[w] + (alpha/dt) M_p[w]` with `w` either one or `rho`.
pub fn build_fp(ops: &PressureOperators, conv: &PressureConvection, shift: f64, rho_weighted: bool) -> CsrMatrix {
    let (n, m) = if rho_weighted {
        (&conv.n_rho, &ops.mp_rho)
    } else {
        (&conv.n_one, &ops.mp_one)
    };
    ops.ap_mu.add(n).linear_combination(1.0, m, shift)
}

enum Inner {
    /// `A^{-1} F_p M^{-1}`
    Pcd { mass: MassSolve, fp: CsrMatrix, lap: SingularSolve },
    /// `a M^{-1} + b A^{-1}`
    Cc { mass: MassSolve, mass_scale: f64, lap: Option<(SingularSolve, f64)> },
    /// `Mv^{-1} + A^{-1} G Mw^{-1}`
    Pcd2 { visc: MassSolve, lap: SingularSolve, g: CsrMatrix, mass: MassSolve },
    /// `L^{-1} B W^{-1} F W^{-1} B^T L^{-1}`
    Lsc { lap: SingularSolve, b: CsrMatrix, bt: CsrMatrix, f: CsrMatrix, w_inv: Vec<f64> },
    /// One singular solve.
    Direct { solve: SingularSolve },
}

/// Approximation of the inverse Schur complement.
pub struct SchurStrategy {
    kind: SchurKind,
    inner: Inner,
    z: Vec<f64>,
    mode: NullspaceMode,
}

fn scaled_laplacian(b: &CsrMatrix, bt: &CsrMatrix, w_inv: &[f64]) -> CsrMatrix {
    b.matmul(&bt.scale_rows(w_inv))
}

impl SchurStrategy {
    pub fn new(
        kind: SchurKind,
        system: &SaddleSystem,
        ops: &PressureOperators,
        conv: &PressureConvection,
        opts: &SchurOptions,
    ) -> Result<Self, PrecondError> {
        let z = ops.nullspace.clone();
        let mode = opts.nullspace;
        let shift = system.mass_shift();
        let stabilised = system.c.nnz() > 0 && system.c.max_abs() > 0.0;
        if kind.is_lsc() && stabilised {
            return Err(PrecondError::Unsupported(format!(
                "{kind} is not applicable to stabilised elements (C != 0)"
            )));
        }
        let mass = |m: &CsrMatrix| MassSolve::new(m, opts.mass_solve);
        let singular = |a: &CsrMatrix| SingularSolve::new(a, &z, mode);
        let inner = match kind {
            SchurKind::Pcd => Inner::Pcd {
                mass: mass(&ops.mp_one)?,
                fp: build_fp(ops, conv, shift, true),
                lap: singular(&ops.ap_one)?,
            },
            SchurKind::PcdVisc => Inner::Pcd {
                mass: mass(&ops.mp_inv_two_mu)?,
                fp: build_fp(ops, conv, shift, true),
                lap: singular(&ops.ap_mu)?,
            },
            SchurKind::Cc => Inner::Cc {
                mass: mass(&ops.mp_one)?,
                mass_scale: ops.reference_viscosity,
                lap: if shift != 0.0 { Some((singular(&ops.ap_one)?, shift)) } else { None },
            },
            SchurKind::Gcc => Inner::Cc {
                mass: mass(&ops.mp_inv_two_mu)?,
                mass_scale: 1.0,
                lap: if shift != 0.0 { Some((singular(&ops.ap_inv_rho)?, shift)) } else { None },
            },
            SchurKind::Pcd2 | SchurKind::Pcd2Rho => {
                let (n, m) = if kind == SchurKind::Pcd2 {
                    (&conv.n_one, &ops.mp_one)
                } else {
                    (&conv.n_rho, &ops.mp_rho)
                };
                let visc = if opts.factor_two { &ops.mp_inv_two_mu } else { &ops.mp_inv_mu };
                Inner::Pcd2 {
                    visc: mass(visc)?,
                    lap: singular(&ops.ap_inv_rho)?,
                    g: n.linear_combination(1.0, m, shift),
                    mass: mass(m)?,
                }
            }
            SchurKind::Lsc | SchurKind::LscD | SchurKind::Lsc2 => {
                let w: Vec<f64> = match kind {
                    SchurKind::Lsc => ops.velocity_mass_diag.clone(),
                    SchurKind::Lsc2 => ops.velocity_mass_mu_diag.clone(),
                    _ => match opts.lsc_d_scaling {
                        LscScaling::RowMax => system.f.row_abs_max(),
                        LscScaling::Diagonal => system.f.diagonal(),
                    },
                };
                let w_inv: Vec<f64> = w.iter().map(|d| 1.0 / d).collect();
                let lap = scaled_laplacian(&system.b, &system.bt, &w_inv);
                Inner::Lsc {
                    lap: singular(&lap)?,
                    b: system.b.clone(),
                    bt: system.bt.clone(),
                    f: system.f.clone(),
                    w_inv,
                }
            }
            SchurKind::Simple => {
                let d_inv: Vec<f64> = system.f.diagonal().iter().map(|d| 1.0 / d).collect();
                let s = scaled_laplacian(&system.b, &system.bt, &d_inv).add(&system.c);
                Inner::Direct { solve: singular(&s)? }
            }
            SchurKind::Exact => {
                if system.n_pre() > opts.max_exact_dofs {
                    return Err(PrecondError::Unsupported(format!(
                        "exact Schur complement limited to {} pressure DOFs (got {})",
                        opts.max_exact_dofs,
                        system.n_pre()
                    )));
                }
                let s = exact_schur_complement(system)?;
                Inner::Direct { solve: singular(&s)? }
            }
        };
        Ok(SchurStrategy { kind, inner, z, mode })
    }

    pub fn kind(&self) -> SchurKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// Approximation of `S^{-1} v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = match &self.inner {
            Inner::Pcd { mass, fp, lap } => lap.solve(&fp.mul_vec(&mass.solve(v))),
            Inner::Cc { mass, mass_scale, lap } => {
                let mut y: Vec<f64> = mass.solve(v).iter().map(|x| mass_scale * x).collect();
                if let Some((lap, s)) = lap {
                    let l = lap.solve(v);
                    y.iter_mut().zip(&l).for_each(|(a, b)| *a += s * b);
                }
                y
            }
            Inner::Pcd2 { visc, lap, g, mass } => {
                let mut y = visc.solve(v);
                let l = lap.solve(&g.mul_vec(&mass.solve(v)));
                y.iter_mut().zip(&l).for_each(|(a, b)| *a += b);
                y
            }
            Inner::Lsc { lap, b, bt, f, w_inv } => {
                let y = lap.solve(v);
                let mut t = bt.mul_vec(&y);
                t.iter_mut().zip(w_inv).for_each(|(a, d)| *a *= d);
                let mut t = f.mul_vec(&t);
                t.iter_mut().zip(w_inv).for_each(|(a, d)| *a *= d);
                lap.solve(&b.mul_vec(&t))
            }
            Inner::Direct { solve } => solve.solve(v),
        };
        if self.mode == NullspaceMode::Project {
            project_out(&mut out, &self.z);
        }
        out
    }
}

/// Right preconditioner `P^{-1}` for `P = [F B^T; 0 -S]`.
pub struct BlockTriangularPreconditioner {
    f: SparseLu,
    bt: CsrMatrix,
    schur: SchurStrategy,
    nv: usize,
}

impl BlockTriangularPreconditioner {
    pub fn new(system: &SaddleSystem, schur: SchurStrategy, pattern: Option<&LuPattern>) -> Result<Self, PrecondError> {
        let f = match pattern {
            Some(p) => sparse_factorize_with(&system.f, p)?,
            None => crate::krylov::sparse_factorize(&system.f)?,
        };
        Ok(BlockTriangularPreconditioner {
            f,
            bt: system.bt.clone(),
            schur,
            nv: system.n_vel(),
        })
    }

    pub fn schur(&self) -> &SchurStrategy {
        &self.schur
    }

    /// `z_p = -S^{-1} r_p`, `z_u = F^{-1}(r_u - B^T z_p)`.
    pub fn apply_blocks(&self, r_u: &[f64], r_p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let z_p: Vec<f64> = self.schur.apply(r_p).iter().map(|v| -v).collect();
        let mut t = r_u.to_vec();
        self.bt.mul_vec_add(-1.0, &z_p, &mut t);
        self.f.solve_in_place(&mut t);
        (t, z_p)
    }
}

impl LinearOperator for BlockTriangularPreconditioner {
    fn dim(&self) -> usize {
        self.nv + self.schur.dim()
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let (r_u, r_p) = r.split_at(self.nv);
        let (z_u, z_p) = self.apply_blocks(r_u, r_p);
        z[..self.nv].copy_from_slice(&z_u);
        z[self.nv..].copy_from_slice(&z_p);
    }
}

/// `K` as a linear operator.
impl LinearOperator for SaddleSystem {
    fn dim(&self) -> usize {
        SaddleSystem::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        SaddleSystem::apply(self, x, y)
    }
}
