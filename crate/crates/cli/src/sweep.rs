use std::cmp::Ordering;
use std::path::Path;

use log::{error, info};
use rayon::prelude::*;
use twophase_core::driver::CavitySetup;
use twophase_core::grid::ElementPair;

use crate::params::{Point, Precond, RunOptions, UsageError};
use crate::record::Record;

/// Cross product of parameter lists.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub pair: ElementPair,
    pub h: Vec<f64>,
    pub re: Vec<f64>,
    pub rho_ratio: Vec<f64>,
    pub mu_ratio: Vec<f64>,
    /// `None` entries are steady runs.
    pub dt: Vec<Option<f64>>,
    pub precond: Vec<Precond>,
    /// Skip points with a density ratio above the viscosity ratio, where the
    /// second phase sets the effective Reynolds number.
    pub lower_triangular: bool,
}

impl SweepSpec {
    pub fn points(&self) -> Result<Vec<Point>, UsageError> {
        let mut points = Vec::new();
        for &h in &self.h {
            for &re in &self.re {
                for &mu in &self.mu_ratio {
                    for &rho in &self.rho_ratio {
                        if self.lower_triangular && rho > mu * (1.0 + 1e-12) {
                            continue;
                        }
                        for &dt in &self.dt {
                            for &precond in &self.precond {
                                let p = Point { pair: self.pair, h, re, rho_ratio: rho, mu_ratio: mu, dt, precond };
                                p.validate()?;
                                points.push(p);
                            }
                        }
                    }
                }
            }
        }
        Ok(points)
    }
}

/// Runs one point. Solver failures give a row with `converged = false`.
/// With `dump`, the system linearised about the final iterate is written
/// there as MatrixMarket files.
pub fn run_point(point: &Point, opts: &RunOptions, dump: Option<&Path>) -> Result<Record, UsageError> {
    let problem = point.problem(opts)?;
    let mut record = Record {
        elements: point.pair.to_string(),
        h: point.h,
        re: point.re,
        rho_ratio: point.rho_ratio,
        mu_ratio: point.mu_ratio,
        alpha: point.alpha() as u8,
        dt: point.dt,
        precond: point.precond.to_string(),
        picard_steps: 0,
        avg_gmres: 0.0,
        max_gmres: 0,
        final_nl_rel_residual: f64::NAN,
        wall_time_s: 0.0,
        converged: false,
    };
    let outcome = CavitySetup::new(&problem).and_then(|setup| {
        let report = setup.run()?;
        if let Some(dir) = dump {
            let system = setup.assembly.system(&report.velocity, &setup.boundary);
            if let Err(e) = system.dump_matrix_market(dir) {
                error!("writing matrices to {}: {e}", dir.display());
            }
        }
        Ok(report)
    });
    match outcome {
        Ok(report) => {
            if let Some(why) = &report.failure {
                error!("{}: {why}", describe(point));
            }
            record.picard_steps = report.picard_steps;
            record.avg_gmres = report.avg_gmres();
            record.max_gmres = report.max_gmres();
            record.final_nl_rel_residual = report.final_nl_rel_residual();
            record.wall_time_s = report.wall_time;
            record.converged = report.converged;
            info!("{}: avg {:.2} over {} steps", describe(point), record.avg_gmres, record.picard_steps);
        }
        Err(e) => error!("{}: {e}", describe(point)),
    }
    Ok(record)
}

pub fn describe(p: &Point) -> String {
    let dt = p.dt.map_or("steady".to_string(), |d| format!("dt={d}"));
    format!("{} h={} Re={} rho={} mu={} {dt} {}", p.pair, p.h, p.re, p.rho_ratio, p.mu_ratio, p.precond)
}

/// Runs every point on the current rayon pool and returns the rows in key order.
pub fn run_points(points: &[Point], opts: &RunOptions) -> Result<Vec<Record>, UsageError> {
    let mut records = points.par_iter().map(|p| run_point(p, opts, None)).collect::<Result<Vec<_>, _>>()?;
    records.sort_by(compare_keys);
    Ok(records)
}

fn compare_keys(a: &Record, b: &Record) -> Ordering {
    let num = |x: f64, y: f64| x.partial_cmp(&y).unwrap_or(Ordering::Equal);
    a.elements
        .cmp(&b.elements)
        .then(num(b.h, a.h))
        .then(num(a.re, b.re))
        .then(num(a.mu_ratio, b.mu_ratio))
        .then(num(a.rho_ratio, b.rho_ratio))
        .then(a.alpha.cmp(&b.alpha))
        .then(num(b.dt.unwrap_or(f64::INFINITY), a.dt.unwrap_or(f64::INFINITY)))
        .then(a.precond.cmp(&b.precond))
}
