use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use twophase_bench::markdown::render;
use twophase_bench::params::{parse_pair, UsageError};
use twophase_bench::{
    compare, parse_h, parse_list, parse_number, read_records, run_point, run_points, write_records, Point, Precond,
    ReferenceTable, RunOptions, SweepSpec,
};

#[derive(Parser)]
#[command(name = "twophase-bench", version, about = "Two-phase lid-driven cavity preconditioner benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one cavity problem and print its CSV row.
    Run(RunArgs),
    /// Run a grid of problems and write CSV (and optionally Markdown).
    Sweep(SweepArgs),
    /// Check a sweep CSV against the published iteration counts.
    Compare(CompareArgs),
}

#[derive(Args)]
struct SolverArgs {
    /// GMRES relative tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Picard relative tolerance.
    #[arg(long, default_value_t = 1e-5)]
    picard_tol: f64,
    #[arg(long, default_value_t = 50)]
    picard_max: usize,
    #[arg(long, default_value_t = 400)]
    max_gmres: usize,
    /// Chebyshev steps for pressure mass solves (exact solves when absent).
    #[arg(long)]
    chebyshev: Option<usize>,
}

impl SolverArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            linear_tol: self.tol,
            picard_tol: self.picard_tol,
            picard_max: self.picard_max,
            max_gmres: self.max_gmres,
            chebyshev: self.chebyshev,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// q2q1, q1q1 or q2pm1
    #[arg(long, default_value = "q2q1")]
    elements: String,
    /// Grid size as tabulated, e.g. 0.0625 or 1/16.
    #[arg(long, default_value = "1/16")]
    h: String,
    #[arg(long, default_value = "100")]
    re: String,
    #[arg(long, default_value = "1.2e-3")]
    rho_ratio: String,
    #[arg(long, default_value = "1.8e-2")]
    mu_ratio: String,
    #[arg(long, default_value = "pcd2")]
    precond: String,
    /// 0 for steady flow, 1 for one time step from rest.
    #[arg(long, default_value_t = 0)]
    alpha: u8,
    #[arg(long)]
    dt: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the final linearised system as MatrixMarket files here.
    #[arg(long)]
    dump_matrices: Option<PathBuf>,
    /// Recorded only: every solve is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "q2q1")]
    elements: String,
    /// Comma-separated lists; fractions and powers such as 1/16 or 10^1.5 are accepted.
    #[arg(long, default_value = "1/16")]
    h: String,
    #[arg(long, default_value = "10,10^1.5,100,10^2.5,1000")]
    re: String,
    #[arg(long, default_value = "1.2e-3")]
    rho_ratio: String,
    #[arg(long, default_value = "1.8e-2")]
    mu_ratio: String,
    #[arg(long, default_value_t = 0)]
    alpha: u8,
    /// Time steps for alpha = 1.
    #[arg(long, default_value = "")]
    dt: String,
    #[arg(long, default_value = "pcd2")]
    precond: String,
    /// Take the points from the cells of a reference table instead (T1, T2, T2o, T4a, T4b, T5).
    #[arg(long = "table")]
    tables: Vec<String>,
    /// Include the fine-grid reference cells (hours of run time).
    #[arg(long)]
    long: bool,
    /// Keep points whose density ratio exceeds the viscosity ratio.
    #[arg(long)]
    no_mask: bool,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    markdown: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// CSV written by `sweep` or `run`.
    #[arg(long)]
    csv: PathBuf,
    /// Reference file (defaults to the bundled tables).
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long = "table")]
    tables: Vec<String>,
    #[arg(long)]
    long: bool,
    /// Report only cells that have a matching row.
    #[arg(long)]
    matched_only: bool,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout()),
    })
}

fn time_step(alpha: u8, dt: Option<f64>) -> Result<Option<f64>, UsageError> {
    match (alpha, dt) {
        (0, None) => Ok(None),
        (0, Some(_)) => {
            warn!("--dt is ignored for steady runs (--alpha 0)");
            Ok(None)
        }
        (1, Some(dt)) => Ok(Some(dt)),
        (1, None) => Err(UsageError("--alpha 1 needs --dt".into())),
        (a, _) => Err(UsageError(format!("--alpha must be 0 or 1 (got {a})"))),
    }
}

fn run(args: RunArgs) -> Result<bool> {
    let dt = args.dt.as_deref().map(parse_number).transpose()?;
    let point = Point {
        pair: parse_pair(&args.elements)?,
        h: parse_h(&args.h)?,
        re: parse_number(&args.re)?,
        rho_ratio: parse_number(&args.rho_ratio)?,
        mu_ratio: parse_number(&args.mu_ratio)?,
        dt: time_step(args.alpha, dt)?,
        precond: args.precond.parse()?,
    };
    point.validate()?;
    if let Some(seed) = args.seed {
        info!("seed {seed} recorded; the solve is deterministic");
    }
    let record = run_point(&point, &args.solver.options(), args.dump_matrices.as_deref())?;
    write_records(output(&args.output)?, std::slice::from_ref(&record))?;
    Ok(record.converged)
}

fn sweep(args: SweepArgs) -> Result<bool> {
    let opts = args.solver.options();
    let points: Vec<Point> = if args.tables.is_empty() {
        let precond = args.precond.split(',').map(str::trim).filter(|s| !s.is_empty());
        let mut dts: Vec<Option<f64>> = Vec::new();
        for d in args.dt.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            dts.push(if d == "steady" { None } else { Some(parse_number(d)?) });
        }
        let dt = match args.alpha {
            0 => vec![None],
            1 if dts.iter().all(Option::is_some) && !dts.is_empty() => dts,
            1 => bail!(UsageError("--alpha 1 needs a list of positive --dt values".into())),
            a => bail!(UsageError(format!("--alpha must be 0 or 1 (got {a})"))),
        };
        let spec = SweepSpec {
            pair: parse_pair(&args.elements)?,
            h: args.h.split(',').map(str::trim).filter(|s| !s.is_empty()).map(parse_h).collect::<Result<_, _>>()?,
            re: parse_list(&args.re)?,
            rho_ratio: parse_list(&args.rho_ratio)?,
            mu_ratio: parse_list(&args.mu_ratio)?,
            dt,
            precond: precond.map(str::parse::<Precond>).collect::<Result<_, _>>()?,
            lower_triangular: !args.no_mask,
        };
        spec.points()?
    } else {
        let reference = ReferenceTable::bundled();
        for t in &args.tables {
            if !reference.table_ids().iter().any(|id| id.eq_ignore_ascii_case(t)) {
                bail!(UsageError(format!("unknown table `{t}` (expected one of {})", reference.table_ids().join(", "))));
            }
        }
        let mut points: Vec<Point> = Vec::new();
        for cell in reference.select(&args.tables, args.long) {
            let p = cell.point();
            if !points.contains(&p) {
                points.push(p);
            }
        }
        points
    };
    info!("{} points", points.len());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs.unwrap_or(0)).build()?;
    let records = pool.install(|| run_points(&points, &opts))?;
    write_records(output(&args.output)?, &records)?;
    if let Some(path) = &args.markdown {
        let mut order: Vec<String> = Vec::new();
        for p in &points {
            let key = p.precond.to_string();
            if !order.contains(&key) {
                order.push(key);
            }
        }
        std::fs::write(path, render(&records, &order)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(records.iter().all(|r| r.converged))
}

fn compare_cmd(args: CompareArgs) -> Result<bool> {
    let reference = match &args.reference {
        Some(p) => ReferenceTable::parse(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => ReferenceTable::bundled(),
    };
    let file = File::open(&args.csv).with_context(|| format!("opening {}", args.csv.display()))?;
    let records = read_records(file)?;
    let mut report = compare(&records, &reference, &args.tables, args.long);
    if args.matched_only {
        report.outcomes.retain(|o| o.got.is_some());
    }
    print!("{}", report.render());
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Compare(a) => compare_cmd(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
