//! Lid-driven cavity runs: Stokes bootstrap followed by Picard iteration.
//!
//! Each Picard step assembles the system linearised about the current
//! velocity, forms the nonlinear residual `s = K x - f` and solves `K d = -s`
//! with zero initial guess, stopping GMRES at `|r| <= eps |s|`. The loop ends
//! once `|s| <= tol |s_0|`, where `s_0` is the residual at the Stokes solution.

use std::time::Instant;

use log::{debug, warn};
use thiserror::Error;

use crate::assembly::{OseenAssembly, PressureOperators, SaddleSystem};
use crate::grid::{build_discretization, build_grid, ElementPair, GridError, MixedDiscretization, PhaseGrid, VelocityField};
use crate::krylov::{gmres, norm2, GmresOptions, GmresStats, KrylovError, LuPattern};
use crate::precond::{
    project_out, BlockTriangularPreconditioner, NullspaceMode, PrecondError, PressureConvection, SchurKind,
    SchurOptions, SchurStrategy,
};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Precond(#[from] PrecondError),
    #[error(transparent)]
    Krylov(#[from] KrylovError),
    #[error("invalid problem: {0}")]
    Invalid(String),
}

/// Problem and solver settings for one cavity run.
#[derive(Debug, Clone)]
pub struct CavityProblem {
    pub n_per_side: usize,
    pub pair: ElementPair,
    pub reynolds: f64,
    pub rho_ratio: f64,
    pub mu_ratio: f64,
    /// 0 for steady flow, 1 for one backward-Euler step from rest.
    pub alpha: f64,
    pub dt: f64,
    pub linear_tol: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub max_gmres: usize,
    pub schur: SchurKind,
    pub schur_options: SchurOptions,
    pub streamline_diffusion: bool,
}

impl CavityProblem {
    /// Steady problem on `n x n` elements with the default tolerances.
    pub fn steady(n_per_side: usize, pair: ElementPair, reynolds: f64, rho_ratio: f64, mu_ratio: f64) -> Self {
        CavityProblem {
            n_per_side,
            pair,
            reynolds,
            rho_ratio,
            mu_ratio,
            alpha: 0.0,
            dt: 1.0,
            linear_tol: 1e-6,
            picard_tol: 1e-5,
            picard_max: 50,
            max_gmres: 400,
            schur: SchurKind::Pcd2,
            schur_options: SchurOptions::default(),
            streamline_diffusion: false,
        }
    }

    pub fn with_schur(mut self, schur: SchurKind) -> Self {
        self.schur = schur;
        self
    }

    /// One time step of length `dt` from rest.
    pub fn with_time_step(mut self, dt: f64) -> Self {
        self.alpha = 1.0;
        self.dt = dt;
        self
    }

    fn validate(&self) -> Result<(), DriverError> {
        if self.alpha != 0.0 && self.alpha != 1.0 {
            return Err(DriverError::Invalid(format!("alpha must be 0 or 1 (got {})", self.alpha)));
        }
        if self.alpha == 1.0 && !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DriverError::Invalid(format!("dt must be positive (got {})", self.dt)));
        }
        for (name, v) in [("linear_tol", self.linear_tol), ("picard_tol", self.picard_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(DriverError::Invalid(format!("{name} must lie in (0, 1) (got {v})")));
            }
        }
        if self.rho_ratio > 1.0 || self.mu_ratio > 1.0 {
            warn!(
                "ratios rho={} mu={} exceed one: the inner phase may dominate the Reynolds number",
                self.rho_ratio, self.mu_ratio
            );
        }
        Ok(())
    }
}

/// Outcome of a cavity run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub picard_steps: usize,
    /// GMRES iterations per Picard step (Stokes bootstrap excluded).
    pub gmres_counts: Vec<usize>,
    pub stokes_gmres: usize,
    /// `|s_k|` for `k = 0..`, starting at the Stokes solution.
    pub nonlinear_residuals: Vec<f64>,
    pub wall_time: f64,
    pub converged: bool,
    /// Reason the run stopped early, if any.
    pub failure: Option<String>,
    pub velocity: VelocityField,
    pub pressure: Vec<f64>,
}

impl SolveReport {
    pub fn avg_gmres(&self) -> f64 {
        if self.gmres_counts.is_empty() {
            0.0
        } else {
            self.gmres_counts.iter().sum::<usize>() as f64 / self.gmres_counts.len() as f64
        }
    }

    /// Average rounded half-up, as tabulated.
    pub fn avg_gmres_rounded(&self) -> usize {
        (self.avg_gmres() + 0.5).floor() as usize
    }

    pub fn max_gmres(&self) -> usize {
        self.gmres_counts.iter().copied().max().unwrap_or(0)
    }

    pub fn final_nl_rel_residual(&self) -> f64 {
        match (self.nonlinear_residuals.first(), self.nonlinear_residuals.last()) {
            (Some(&s0), Some(&s)) if s0 > 0.0 => s / s0,
            _ => 0.0,
        }
    }
}

/// Assembled problem ready to solve.
pub struct CavitySetup {
    pub problem: CavityProblem,
    pub grid: PhaseGrid,
    pub disc: MixedDiscretization,
    pub assembly: OseenAssembly,
    pub ops: PressureOperators,
    pub boundary: VelocityField,
}

impl CavitySetup {
    pub fn new(problem: &CavityProblem) -> Result<Self, DriverError> {
        problem.validate()?;
        let grid = build_grid(problem.n_per_side, problem.rho_ratio, problem.mu_ratio, problem.reynolds)?;
        let disc = build_discretization(&grid, problem.pair);
        let assembly = OseenAssembly::new(&grid, &disc, problem.alpha, problem.dt)
            .with_streamline_diffusion(problem.streamline_diffusion);
        let ops = PressureOperators::new(&assembly);
        let boundary = disc.boundary_values(1.0);
        Ok(CavitySetup {
            problem: problem.clone(),
            grid,
            disc,
            assembly,
            ops,
            boundary,
        })
    }

    fn wind(&self, x: &[f64]) -> VelocityField {
        self.disc.expand_velocity(&x[..self.disc.n_vel_dofs()], &self.boundary)
    }

    fn preconditioner(
        &self,
        kind: SchurKind,
        system: &SaddleSystem,
        wind: &VelocityField,
        pattern: Option<&LuPattern>,
    ) -> Result<BlockTriangularPreconditioner, DriverError> {
        let conv = PressureConvection::assemble(&self.assembly, wind);
        let schur = SchurStrategy::new(kind, system, &self.ops, &conv, &self.problem.schur_options)?;
        Ok(BlockTriangularPreconditioner::new(system, schur, pattern)?)
    }

    fn gmres_options(&self, ref_norm: f64) -> GmresOptions {
        GmresOptions {
            rel_tol: self.problem.linear_tol,
            ref_norm,
            max_iter: self.problem.max_gmres,
        }
    }

    fn project_pressure(&self, x: &mut [f64]) {
        if self.problem.schur_options.nullspace == NullspaceMode::Project {
            let nv = self.disc.n_vel_dofs();
            project_out(&mut x[nv..], &self.ops.nullspace);
        }
    }

    /// Stokes solve (zero wind) preconditioned with the two-phase
    /// Cahouet-Chabard approximation, tolerance relative to `|f|`.
    pub fn solve_stokes_bootstrap(&self) -> Result<(Vec<f64>, GmresStats), DriverError> {
        let wind = VelocityField::zeros(self.disc.n_vel_nodes());
        let system = self.assembly.system(&wind, &self.boundary);
        let rhs = system.rhs();
        let n = rhs.len();
        let ref_norm = norm2(&rhs);
        if ref_norm == 0.0 {
            return Ok((vec![0.0; n], GmresStats::converged_at_start(0.0)));
        }
        let pre = self.preconditioner(SchurKind::Gcc, &system, &wind, None)?;
        let (mut x, stats) = gmres(&system, &pre, &rhs, &vec![0.0; n], &self.gmres_options(ref_norm))?;
        self.project_pressure(&mut x);
        Ok((x, stats))
    }

    /// One Picard correction about `x` for the given residual `s = K x - f`.
    pub fn picard_step(
        &self,
        system: &SaddleSystem,
        wind: &VelocityField,
        s: &[f64],
        pattern: Option<&LuPattern>,
    ) -> Result<(Vec<f64>, GmresStats), DriverError> {
        let ref_norm = norm2(s);
        if ref_norm == 0.0 {
            return Ok((vec![0.0; s.len()], GmresStats::converged_at_start(0.0)));
        }
        let pre = self.preconditioner(self.problem.schur, system, wind, pattern)?;
        let rhs: Vec<f64> = s.iter().map(|v| -v).collect();
        Ok(gmres(system, &pre, &rhs, &vec![0.0; rhs.len()], &self.gmres_options(ref_norm))?)
    }

    pub fn run(&self) -> Result<SolveReport, DriverError> {
        let start = Instant::now();
        let (mut x, stokes) = self.solve_stokes_bootstrap()?;
        let mut report = SolveReport {
            picard_steps: 0,
            gmres_counts: Vec::new(),
            stokes_gmres: stokes.iterations,
            nonlinear_residuals: Vec::new(),
            wall_time: 0.0,
            converged: false,
            failure: None,
            velocity: VelocityField::zeros(0),
            pressure: Vec::new(),
        };
        if !stokes.converged {
            report.failure = Some(format!("Stokes solve did not converge in {} iterations", stokes.iterations));
        }
        let mut pattern: Option<LuPattern> = None;
        while report.failure.is_none() {
            let wind = self.wind(&x);
            let system = self.assembly.system(&wind, &self.boundary);
            let s = system.residual(&x);
            let s_norm = norm2(&s);
            report.nonlinear_residuals.push(s_norm);
            let s0 = report.nonlinear_residuals[0];
            debug!("picard {}: |s| = {:.3e}", report.picard_steps, s_norm);
            if s_norm <= self.problem.picard_tol * s0 || s_norm == 0.0 {
                report.converged = true;
                break;
            }
            if report.picard_steps >= self.problem.picard_max {
                report.failure = Some(format!("Picard iteration stopped after {} steps", self.problem.picard_max));
                break;
            }
            if pattern.is_none() {
                pattern = Some(LuPattern::analyse(&system.f)?);
            }
            let (d, stats) = self.picard_step(&system, &wind, &s, pattern.as_ref())?;
            report.picard_steps += 1;
            report.gmres_counts.push(stats.iterations);
            x.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
            self.project_pressure(&mut x);
            if !stats.converged {
                report.failure = Some(format!(
                    "GMRES reached {} iterations at Picard step {}",
                    stats.iterations, report.picard_steps
                ));
            }
        }
        let nv = self.disc.n_vel_dofs();
        report.velocity = self.wind(&x);
        report.pressure = x[nv..].to_vec();
        report.wall_time = start.elapsed().as_secs_f64();
        Ok(report)
    }
}

/// Steady or single-time-step cavity run.
pub fn run_cavity(problem: &CavityProblem) -> Result<SolveReport, DriverError> {
    CavitySetup::new(problem)?.run()
}

/// One backward-Euler step of length `dt` from rest.
pub fn run_single_timestep(problem: &CavityProblem, dt: f64) -> Result<SolveReport, DriverError> {
    run_cavity(&problem.clone().with_time_step(dt))
}
