use std::fmt;
use std::str::FromStr;

use twophase_core::driver::CavityProblem;
use twophase_core::grid::ElementPair;
use twophase_core::precond::{LscScaling, MassSolveKind, SchurKind, SchurOptions};

/// Invalid flags or parameter combinations.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Numbers written as `1e-3`, `1/16` or `10^1.5`.
pub fn parse_number(s: &str) -> Result<f64, UsageError> {
    let s = s.trim();
    let bad = || UsageError(format!("cannot read `{s}` as a number"));
    let value = if let Some((a, b)) = s.split_once('/') {
        a.trim().parse::<f64>().map_err(|_| bad())? / b.trim().parse::<f64>().map_err(|_| bad())?
    } else if let Some((a, b)) = s.split_once('^') {
        a.trim().parse::<f64>().map_err(|_| bad())?.powf(b.trim().parse::<f64>().map_err(|_| bad())?)
    } else {
        s.parse::<f64>().map_err(|_| bad())?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

/// Comma-separated numbers; an empty string is an empty list.
pub fn parse_list(s: &str) -> Result<Vec<f64>, UsageError> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(parse_number).collect()
}

/// Tabulated grid size `h`; the cavity (-1, 1)^2 then has `2 / h` elements a side.
pub fn parse_h(s: &str) -> Result<f64, UsageError> {
    let h = parse_number(s)?;
    elements_for_h(h)?;
    Ok(h)
}

pub fn elements_for_h(h: f64) -> Result<usize, UsageError> {
    let n = 2.0 / h;
    if !(h > 0.0) || (n - n.round()).abs() > 1e-9 * n || n.round() < 2.0 {
        return Err(UsageError(format!("h = {h} does not give a whole number of elements (2/h = {n})")));
    }
    Ok(n.round() as usize)
}

/// Preconditioner key as used on the command line and in CSV rows:
/// any Schur key, plus `lsc-d-diag` for LSC_D with `diag(F)` scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Precond {
    pub kind: SchurKind,
    pub scaling: LscScaling,
}

impl FromStr for Precond {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        if norm == "lsc-d-diag" {
            return Ok(Precond { kind: SchurKind::LscD, scaling: LscScaling::Diagonal });
        }
        let kind = norm.parse::<SchurKind>().map_err(|e| UsageError(e.to_string()))?;
        Ok(Precond { kind, scaling: LscScaling::RowMax })
    }
}

impl fmt::Display for Precond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind == SchurKind::LscD && self.scaling == LscScaling::Diagonal {
            f.write_str("lsc-d-diag")
        } else {
            f.write_str(self.kind.key())
        }
    }
}

impl Precond {
    /// Rejects combinations the preconditioner is not defined for.
    pub fn check(&self, pair: ElementPair) -> Result<(), UsageError> {
        if self.kind.is_lsc() && pair == ElementPair::Q1Q1 {
            return Err(UsageError(format!(
                "--precond {self} cannot be used with --elements q1q1: LSC does not immediately apply to \
                 stabilised elements, where stabilisation terms are required (Q1-Q1 carries the pressure \
                 stabilisation matrix C); use pcd2, pcd, gcc or simple instead"
            )));
        }
        Ok(())
    }
}

pub fn parse_pair(s: &str) -> Result<ElementPair, UsageError> {
    s.parse::<ElementPair>().map_err(UsageError)
}

/// Solver settings shared by every point of a run or sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub linear_tol: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub max_gmres: usize,
    /// Chebyshev steps for the pressure mass solves; `None` solves exactly.
    pub chebyshev: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { linear_tol: 1e-6, picard_tol: 1e-5, picard_max: 50, max_gmres: 400, chebyshev: None }
    }
}

/// One cavity run.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub pair: ElementPair,
    pub h: f64,
    pub re: f64,
    pub rho_ratio: f64,
    pub mu_ratio: f64,
    /// `None` for steady flow, otherwise one backward-Euler step of this length.
    pub dt: Option<f64>,
    pub precond: Precond,
}

impl Point {
    pub fn alpha(&self) -> f64 {
        if self.dt.is_some() {
            1.0
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<(), UsageError> {
        elements_for_h(self.h)?;
        if !(self.re > 0.0) {
            return Err(UsageError(format!("Re must be positive (got {})", self.re)));
        }
        if !(self.rho_ratio > 0.0 && self.mu_ratio > 0.0) {
            return Err(UsageError("density and viscosity ratios must be positive".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(UsageError(format!("dt must be positive (got {dt})")));
            }
        }
        self.precond.check(self.pair)
    }

    pub fn problem(&self, opts: &RunOptions) -> Result<CavityProblem, UsageError> {
        self.validate()?;
        let n = elements_for_h(self.h)?;
        let mut p = CavityProblem::steady(n, self.pair, self.re, self.rho_ratio, self.mu_ratio)
            .with_schur(self.precond.kind);
        if let Some(dt) = self.dt {
            p = p.with_time_step(dt);
        }
        p.linear_tol = opts.linear_tol;
        p.picard_tol = opts.picard_tol;
        p.picard_max = opts.picard_max;
        p.max_gmres = opts.max_gmres;
        p.schur_options = SchurOptions {
            lsc_d_scaling: self.precond.scaling,
            mass_solve: opts.chebyshev.map_or(MassSolveKind::Exact, MassSolveKind::Chebyshev),
            ..SchurOptions::default()
        };
        Ok(p)
    }
}
