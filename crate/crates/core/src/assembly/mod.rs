//! Global finite element assembly and the linearised saddle-point system.
//!
//! Velocity matrices are first assembled over every velocity node (boundary
//! included), two components stacked `[x; y]`, then the Dirichlet nodes are
//! eliminated. Pressure matrices carry no boundary conditions.

pub mod basis;
pub mod dg;
pub mod element;

use std::io::{self, Write};
use std::path::Path;

use crate::grid::{ElementPair, MixedDiscretization, PhaseGrid, VelocityField};
use crate::krylov::CsrMatrix;

pub use basis::{Basis, Quadrature, ShapeValue};
pub use element::{LocalMatrix, Tabulation};

/// Piecewise-constant coefficient multiplying an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weight {
    One,
    Rho,
    InvRho,
    Mu,
    InvMu,
    /// `1 / (2 mu)`
    InvTwoMu,
}

impl Weight {
    pub fn value(self, rho: f64, mu: f64) -> f64 {
        match self {
            Weight::One => 1.0,
            Weight::Rho => rho,
            Weight::InvRho => 1.0 / rho,
            Weight::Mu => mu,
            Weight::InvMu => 1.0 / mu,
            Weight::InvTwoMu => 0.5 / mu,
        }
    }

    pub fn element_values(self, grid: &PhaseGrid) -> Vec<f64> {
        grid.rho()
            .iter()
            .zip(grid.mu())
            .map(|(&r, &m)| self.value(r, m))
            .collect()
    }
}

pub fn velocity_basis(pair: ElementPair) -> Basis {
    if pair.quadratic_velocity() {
        Basis::Q2
    } else {
        Basis::Q1
    }
}

pub fn pressure_basis(pair: ElementPair) -> Basis {
    if pair.continuous_pressure() {
        Basis::Q1
    } else {
        Basis::P1Disc
    }
}

/// Global assembly on one discretisation.
pub struct Assembler<'a> {
    disc: &'a MixedDiscretization,
    grid: &'a PhaseGrid,
    quad: Quadrature,
    vbasis: Basis,
    pbasis: Basis,
    tab_v: Tabulation,
    tab_p: Tabulation,
}

impl<'a> Assembler<'a> {
    /// Uses the 3x3 Gauss rule, exact for every integrand assembled here.
    pub fn new(disc: &'a MixedDiscretization, grid: &'a PhaseGrid) -> Self {
        Self::with_quadrature(disc, grid, Quadrature::default())
    }

    pub fn with_quadrature(disc: &'a MixedDiscretization, grid: &'a PhaseGrid, quad: Quadrature) -> Self {
        assert_eq!(disc.n_per_side(), grid.n_per_side(), "grid and discretisation differ");
        let vbasis = velocity_basis(disc.pair());
        let pbasis = pressure_basis(disc.pair());
        let h = grid.h();
        Assembler {
            disc,
            grid,
            tab_v: Tabulation::new(vbasis, h, &quad),
            tab_p: Tabulation::new(pbasis, h, &quad),
            quad,
            vbasis,
            pbasis,
        }
    }

    pub fn discretization(&self) -> &MixedDiscretization {
        self.disc
    }

    pub fn grid(&self) -> &PhaseGrid {
        self.grid
    }

    fn scatter(
        &self,
        nrows: usize,
        ncols: usize,
        local: impl Fn(usize) -> (Vec<usize>, Vec<usize>, LocalMatrix),
    ) -> CsrMatrix {
        let mut t = Vec::new();
        for e in 0..self.grid.n_elements() {
            let (rows, cols, m) = local(e);
            for (i, &r) in rows.iter().enumerate() {
                for (j, &c) in cols.iter().enumerate() {
                    t.push((r, c, m.get(i, j)));
                }
            }
        }
        CsrMatrix::from_triplets(nrows, ncols, &t)
    }

    fn stacked_nodes(&self, e: usize) -> Vec<usize> {
        let n = self.disc.n_vel_nodes();
        let nodes = self.disc.elem_vel_nodes(e);
        nodes.iter().copied().chain(nodes.iter().map(|k| k + n)).collect()
    }

    fn wind_coeffs(&self, e: usize, wind: &VelocityField) -> Vec<[f64; 2]> {
        self.disc
            .elem_vel_nodes(e)
            .iter()
            .map(|&k| [wind.ux[k], wind.uy[k]])
            .collect()
    }

    /// Scalar weighted velocity mass over all velocity nodes.
    pub fn velocity_mass(&self, weight: Weight) -> CsrMatrix {
        let m = element::mass(self.vbasis, self.grid.h(), &self.quad);
        let w = weight.element_values(self.grid);
        let n = self.disc.n_vel_nodes();
        self.scatter(n, n, |e| {
            let nodes = self.disc.elem_vel_nodes(e).to_vec();
            (nodes.clone(), nodes, m.scaled(w[e]))
        })
    }

    /// Viscous operator `int 2 mu D(u) : D(v)` on stacked components.
    pub fn velocity_diffusion(&self) -> CsrMatrix {
        let a = element::deformation(self.vbasis, self.grid.h(), 1.0, &self.quad);
        let mu = self.grid.mu();
        let n = 2 * self.disc.n_vel_nodes();
        self.scatter(n, n, |e| {
            let dofs = self.stacked_nodes(e);
            (dofs.clone(), dofs, a.scaled(mu[e]))
        })
    }

    /// Scalar weighted convection `int weight (w . grad phi_j) phi_i` over all
    /// velocity nodes, applied identically to both components.
    pub fn velocity_convection(&self, wind: &VelocityField, weight: Weight) -> CsrMatrix {
        let w = weight.element_values(self.grid);
        let n = self.disc.n_vel_nodes();
        self.scatter(n, n, |e| {
            let nodes = self.disc.elem_vel_nodes(e).to_vec();
            let c = element::convection_with(&self.tab_v, &self.tab_v, &self.wind_coeffs(e, wind));
            (nodes.clone(), nodes, c.scaled(w[e]))
        })
    }

    /// Streamline-diffusion stabilisation with the element parameter
    /// `delta = h / (2 |w|) (1 - 1/Pe)` for `Pe = |w| h rho / (2 mu) > 1`,
    /// `|w|` taken at the element centre. Scaled by `rho`.
    pub fn streamline_diffusion(&self, wind: &VelocityField) -> CsrMatrix {
        let h = self.grid.h();
        let n = self.disc.n_vel_nodes();
        let centre = self.vbasis.eval_vec(0.0, 0.0, h);
        self.scatter(n, n, |e| {
            let nodes = self.disc.elem_vel_nodes(e).to_vec();
            let coeffs = self.wind_coeffs(e, wind);
            let mut wc = [0.0, 0.0];
            for (c, s) in coeffs.iter().zip(&centre) {
                wc[0] += c[0] * s.value;
                wc[1] += c[1] * s.value;
            }
            let speed = wc[0].hypot(wc[1]);
            let (rho, mu) = (self.grid.rho()[e], self.grid.mu()[e]);
            let pe = speed * h * rho / (2.0 * mu);
            let delta = if pe > 1.0 { h / (2.0 * speed) * (1.0 - 1.0 / pe) } else { 0.0 };
            let s = element::streamline_diffusion_with(&self.tab_v, &self.tab_v, &coeffs, delta * rho);
            (nodes.clone(), nodes, s)
        })
    }

    /// Divergence `B` from stacked velocity nodes to pressure DOFs.
    pub fn divergence(&self) -> CsrMatrix {
        let b = element::divergence(self.pbasis, self.vbasis, self.grid.h(), &self.quad);
        let np = self.disc.n_pre_dofs();
        let nv = 2 * self.disc.n_vel_nodes();
        self.scatter(np, nv, |e| (self.disc.elem_pre_dofs(e).to_vec(), self.stacked_nodes(e), b.clone()))
    }

    /// Pressure stabilisation `C` (zero for inf-sup stable pairs).
    pub fn stabilization(&self) -> CsrMatrix {
        let np = self.disc.n_pre_dofs();
        if !self.disc.pair().is_stabilised() {
            return CsrMatrix::zeros(np, np);
        }
        let c = element::stabilization(self.grid.h(), 1.0, &self.quad);
        let mu = self.grid.mu();
        self.scatter(np, np, |e| {
            let dofs = self.disc.elem_pre_dofs(e).to_vec();
            (dofs.clone(), dofs, c.scaled(1.0 / mu[e]))
        })
    }

    pub fn pressure_mass(&self, weight: Weight) -> CsrMatrix {
        let m = element::mass(self.pbasis, self.grid.h(), &self.quad);
        let w = weight.element_values(self.grid);
        let np = self.disc.n_pre_dofs();
        self.scatter(np, np, |e| {
            let dofs = self.disc.elem_pre_dofs(e).to_vec();
            (dofs.clone(), dofs, m.scaled(w[e]))
        })
    }

    /// Weighted pressure Laplacian with natural (zero-flux) boundaries.
    pub fn pressure_laplacian(&self, weight: Weight) -> CsrMatrix {
        let w = weight.element_values(self.grid);
        if !self.disc.pair().continuous_pressure() {
            return dg::laplacian(self.grid, &w);
        }
        let l = element::laplacian(self.pbasis, self.grid.h(), &self.quad);
        let np = self.disc.n_pre_dofs();
        self.scatter(np, np, |e| {
            let dofs = self.disc.elem_pre_dofs(e).to_vec();
            (dofs.clone(), dofs, l.scaled(w[e]))
        })
    }

    /// Weighted pressure-space convection by the velocity field `wind`.
    pub fn pressure_convection(&self, wind: &VelocityField, weight: Weight) -> CsrMatrix {
        let w = weight.element_values(self.grid);
        if !self.disc.pair().continuous_pressure() {
            return dg::convection(self.disc, self.grid, self.vbasis, &self.tab_p, &self.tab_v, wind, &w);
        }
        let np = self.disc.n_pre_dofs();
        self.scatter(np, np, |e| {
            let dofs = self.disc.elem_pre_dofs(e).to_vec();
            let c = element::convection_with(&self.tab_p, &self.tab_v, &self.wind_coeffs(e, wind));
            (dofs.clone(), dofs, c.scaled(w[e]))
        })
    }
}

pub fn assemble_velocity_mass(disc: &MixedDiscretization, grid: &PhaseGrid, weight: Weight) -> CsrMatrix {
    Assembler::new(disc, grid).velocity_mass(weight)
}

pub fn assemble_velocity_diffusion(disc: &MixedDiscretization, grid: &PhaseGrid) -> CsrMatrix {
    Assembler::new(disc, grid).velocity_diffusion()
}

pub fn assemble_divergence(disc: &MixedDiscretization, grid: &PhaseGrid) -> CsrMatrix {
    Assembler::new(disc, grid).divergence()
}

pub fn assemble_stabilization(disc: &MixedDiscretization, grid: &PhaseGrid) -> CsrMatrix {
    Assembler::new(disc, grid).stabilization()
}

pub fn assemble_pressure_mass(disc: &MixedDiscretization, grid: &PhaseGrid, weight: Weight) -> CsrMatrix {
    Assembler::new(disc, grid).pressure_mass(weight)
}

pub fn assemble_pressure_laplacian(disc: &MixedDiscretization, grid: &PhaseGrid, weight: Weight) -> CsrMatrix {
    Assembler::new(disc, grid).pressure_laplacian(weight)
}

/// `[M 0; 0 M]` for a scalar `M`.
pub fn block_diag2(m: &CsrMatrix) -> CsrMatrix {
    CsrMatrix::block(&[vec![Some(m), None], vec![None, Some(m)]])
}

/// Time-stepping coefficient `alpha / dt`; zero for steady problems.
pub fn mass_shift(alpha: f64, dt: f64) -> f64 {
    if alpha == 0.0 {
        0.0
    } else {
        alpha / dt
    }
}

/// Linearised two-phase system `[F B^T; B -C]` on the interior velocity
/// unknowns, with `F = (alpha/dt) M[rho] + N[rho] + A[mu]`.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub a_mu: CsrMatrix,
    pub n_rho: CsrMatrix,
    pub m_rho: CsrMatrix,
    pub b: CsrMatrix,
    pub bt: CsrMatrix,
    pub c: CsrMatrix,
    pub f: CsrMatrix,
    pub alpha: f64,
    pub dt: f64,
    /// Lifted boundary data: `-F[:, D] u_D`.
    pub rhs_u: Vec<f64>,
    /// Lifted boundary data: `-B[:, D] u_D`.
    pub rhs_p: Vec<f64>,
}

impl SaddleSystem {
    pub fn n_vel(&self) -> usize {
        self.f.nrows()
    }

    pub fn n_pre(&self) -> usize {
        self.b.nrows()
    }

    pub fn dim(&self) -> usize {
        self.n_vel() + self.n_pre()
    }

    pub fn mass_shift(&self) -> f64 {
        mass_shift(self.alpha, self.dt)
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.rhs_u.iter().chain(&self.rhs_p).copied().collect()
    }

    /// `y = K x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nv = self.n_vel();
        let (xu, xp) = x.split_at(nv);
        let (yu, yp) = y.split_at_mut(nv);
        self.f.mul_vec_into(xu, yu);
        self.bt.mul_vec_add(1.0, xp, yu);
        self.b.mul_vec_into(xu, yp);
        self.c.mul_vec_add(-1.0, xp, yp);
    }

    /// `K x - rhs`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.dim()];
        self.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(self.rhs_u.iter().chain(&self.rhs_p)) {
            *ri -= bi;
        }
        r
    }

    /// Assembled `K` as one sparse matrix.
    pub fn matrix(&self) -> CsrMatrix {
        let mc = self.c.scale(-1.0);
        CsrMatrix::block(&[vec![Some(&self.f), Some(&self.bt)], vec![Some(&self.b), Some(&mc)]])
    }

    /// Writes the blocks as MatrixMarket files `F.mtx`, `B.mtx`, `C.mtx`,
    /// `A.mtx`, `N.mtx`, `M.mtx` and `K.mtx` into `dir`.
    pub fn dump_matrix_market(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let k = self.matrix();
        for (name, m) in [
            ("F", &self.f),
            ("B", &self.b),
            ("C", &self.c),
            ("A", &self.a_mu),
            ("N", &self.n_rho),
            ("M", &self.m_rho),
            ("K", &k),
        ] {
            let file = std::fs::File::create(dir.join(format!("{name}.mtx")))?;
            let mut out = io::BufWriter::new(file);
            m.write_matrix_market(&mut out)?;
            out.flush()?;
        }
        Ok(())
    }
}

/// Wind-independent pieces of the saddle system for one grid, pair and time
/// step, cached across nonlinear iterations.
#[derive(Debug, Clone)]
pub struct OseenAssembly {
    disc: MixedDiscretization,
    grid: PhaseGrid,
    alpha: f64,
    dt: f64,
    streamline_diffusion: bool,
    vel_map: Vec<Option<usize>>,
    m_full: CsrMatrix,
    a_full: CsrMatrix,
    b_full: CsrMatrix,
    m_rho: CsrMatrix,
    a_mu: CsrMatrix,
    b: CsrMatrix,
    bt: CsrMatrix,
    c: CsrMatrix,
}

impl OseenAssembly {
    pub fn new(grid: &PhaseGrid, disc: &MixedDiscretization, alpha: f64, dt: f64) -> Self {
        let asm = Assembler::new(disc, grid);
        let nn = disc.n_vel_nodes();
        let nf = disc.n_free_nodes();
        let mut vel_map = vec![None; 2 * nn];
        for (node, slot) in disc.node_to_free().iter().enumerate() {
            if let Some(f) = *slot {
                vel_map[node] = Some(f);
                vel_map[nn + node] = Some(nf + f);
            }
        }
        let nv = 2 * nf;
        let np = disc.n_pre_dofs();
        let pre_map: Vec<Option<usize>> = (0..np).map(Some).collect();
        let m_full = block_diag2(&asm.velocity_mass(Weight::Rho));
        let a_full = asm.velocity_diffusion();
        let b_full = asm.divergence();
        let m_rho = m_full.select(&vel_map, nv, &vel_map, nv);
        let a_mu = a_full.select(&vel_map, nv, &vel_map, nv);
        let b = b_full.select(&pre_map, np, &vel_map, nv);
        let bt = b.transpose();
        let c = asm.stabilization();
        OseenAssembly {
            disc: disc.clone(),
            grid: grid.clone(),
            alpha,
            dt,
            streamline_diffusion: false,
            vel_map,
            m_full,
            a_full,
            b_full,
            m_rho,
            a_mu,
            b,
            bt,
            c,
        }
    }

    /// Adds streamline-diffusion stabilisation to the convection term.
    pub fn with_streamline_diffusion(mut self, on: bool) -> Self {
        self.streamline_diffusion = on;
        self
    }

    pub fn discretization(&self) -> &MixedDiscretization {
        &self.disc
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn assembler(&self) -> Assembler<'_> {
        Assembler::new(&self.disc, &self.grid)
    }

    /// Stacked full-node convection `[N 0; 0 N]` weighted by `rho`.
    fn convection_full(&self, wind: &VelocityField) -> CsrMatrix {
        let asm = self.assembler();
        let mut n = asm.velocity_convection(wind, Weight::Rho);
        if self.streamline_diffusion {
            n = n.add(&asm.streamline_diffusion(wind));
        }
        block_diag2(&n)
    }

    /// System linearised about `wind`, with boundary data `boundary` lifted
    /// into the right-hand side.
    pub fn system(&self, wind: &VelocityField, boundary: &VelocityField) -> SaddleSystem {
        let nv = self.disc.n_vel_dofs();
        let shift = mass_shift(self.alpha, self.dt);
        let n_full = self.convection_full(wind);
        let f_full = self.a_full.add(&n_full).linear_combination(1.0, &self.m_full, shift);
        let ud = boundary.stacked();
        let fu = f_full.mul_vec(&ud);
        let bu = self.b_full.mul_vec(&ud);
        let mut rhs_u = vec![0.0; nv];
        for (k, slot) in self.vel_map.iter().enumerate() {
            if let Some(f) = *slot {
                rhs_u[f] = -fu[k];
            }
        }
        let rhs_p = bu.iter().map(|v| -v).collect();
        let n_rho = n_full.select(&self.vel_map, nv, &self.vel_map, nv);
        let f = f_full.select(&self.vel_map, nv, &self.vel_map, nv);
        SaddleSystem {
            a_mu: self.a_mu.clone(),
            n_rho,
            m_rho: self.m_rho.clone(),
            b: self.b.clone(),
            bt: self.bt.clone(),
            c: self.c.clone(),
            f,
            alpha: self.alpha,
            dt: self.dt,
            rhs_u,
            rhs_p,
        }
    }

    /// Stokes-type system (no convection) with the given `mu`-weighted
    /// viscous block and boundary lift.
    pub fn stokes_system(&self, boundary: &VelocityField) -> SaddleSystem {
        self.system(&VelocityField::zeros(self.disc.n_vel_nodes()), boundary)
    }

    /// Velocity mass matrices on the interior unknowns, both components:
    /// unit weight and `mu`-weighted.
    pub fn interior_velocity_mass(&self, weight: Weight) -> CsrMatrix {
        let nv = self.disc.n_vel_dofs();
        block_diag2(&self.assembler().velocity_mass(weight)).select(&self.vel_map, nv, &self.vel_map, nv)
    }
}

/// Pressure-space operators used by the Schur-complement approximations.
#[derive(Debug, Clone)]
pub struct PressureOperators {
    pub mp_one: CsrMatrix,
    pub mp_rho: CsrMatrix,
    pub mp_inv_mu: CsrMatrix,
    pub mp_inv_two_mu: CsrMatrix,
    pub ap_one: CsrMatrix,
    pub ap_inv_rho: CsrMatrix,
    pub ap_mu: CsrMatrix,
    /// Diagonal of the unit-weight velocity mass on interior unknowns.
    pub velocity_mass_diag: Vec<f64>,
    /// Diagonal of the `mu`-weighted velocity mass on interior unknowns.
    pub velocity_mass_mu_diag: Vec<f64>,
    /// Constant-pressure vector spanning the null space.
    pub nullspace: Vec<f64>,
    /// `1/Re`, the viscosity of the outer phase.
    pub reference_viscosity: f64,
}

impl PressureOperators {
    pub fn new(assembly: &OseenAssembly) -> Self {
        let asm = assembly.assembler();
        PressureOperators {
            mp_one: asm.pressure_mass(Weight::One),
            mp_rho: asm.pressure_mass(Weight::Rho),
            mp_inv_mu: asm.pressure_mass(Weight::InvMu),
            mp_inv_two_mu: asm.pressure_mass(Weight::InvTwoMu),
            ap_one: asm.pressure_laplacian(Weight::One),
            ap_inv_rho: asm.pressure_laplacian(Weight::InvRho),
            ap_mu: asm.pressure_laplacian(Weight::Mu),
            velocity_mass_diag: assembly.interior_velocity_mass(Weight::One).diagonal(),
            velocity_mass_mu_diag: assembly.interior_velocity_mass(Weight::Mu).diagonal(),
            nullspace: assembly.discretization().constant_pressure_mode(),
            reference_viscosity: assembly.grid().reference_viscosity(),
        }
    }

    pub fn n(&self) -> usize {
        self.nullspace.len()
    }
}
