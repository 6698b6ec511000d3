//! Published iteration counts and the comparison of sweep output against them.
//!
//! The data file holds `policy` and `cell` lines of `key=value` pairs:
//!
//! ```text
//! policy table=T2 precond=pcd2 abs=3 rel=0
//! cell table=T2 elements=q2q1 h=1/16 re=10 rho=1.2e-3 mu=1.8e-2 dt=steady precond=pcd2 expected=17
//! ```
//!
//! A cell passes when its rounded average lies within `max(abs, rel * expected)`.

use std::collections::HashMap;
use std::fmt::Write;

use twophase_core::grid::ElementPair;

use crate::markdown::{format_h, format_re};
use crate::params::{parse_h, parse_number, parse_pair, Point, Precond, UsageError};
use crate::record::Record;

pub const BUNDLED: &str = include_str!("../data/reference_tables.txt");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Policy {
    pub abs: f64,
    pub rel: f64,
}

impl Policy {
    pub fn tolerance(&self, expected: f64) -> f64 {
        self.abs.max(self.rel * expected)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub table: String,
    pub pair: ElementPair,
    pub h: f64,
    pub re: f64,
    pub rho_ratio: f64,
    pub mu_ratio: f64,
    pub dt: Option<f64>,
    pub precond: Precond,
    pub expected: usize,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs())
}

impl Cell {
    /// Cells finer than h = 1/64 (h = 1/128 for Q1-Q1) take hours at desk scale.
    pub fn is_long(&self) -> bool {
        let finest = if self.pair == ElementPair::Q1Q1 { 1.0 / 128.0 } else { 1.0 / 64.0 };
        self.h < finest * (1.0 - 1e-9)
    }

    pub fn point(&self) -> Point {
        Point {
            pair: self.pair,
            h: self.h,
            re: self.re,
            rho_ratio: self.rho_ratio,
            mu_ratio: self.mu_ratio,
            dt: self.dt,
            precond: self.precond,
        }
    }

    pub fn matches(&self, r: &Record) -> bool {
        r.elements == self.pair.to_string()
            && r.precond == self.precond.to_string()
            && close(r.h, self.h)
            && close(r.re, self.re)
            && close(r.rho_ratio, self.rho_ratio)
            && close(r.mu_ratio, self.mu_ratio)
            && match (r.dt, self.dt) {
                (None, None) => true,
                (Some(a), Some(b)) => close(a, b),
                _ => false,
            }
    }

    pub fn describe(&self) -> String {
        let dt = self.dt.map_or("steady".to_string(), |d| format!("dt={}", format_h(d)));
        format!(
            "{} {} h={} Re={} rho={} mu={} {dt} {}",
            self.table,
            self.pair,
            format_h(self.h),
            format_re(self.re),
            self.rho_ratio,
            self.mu_ratio,
            self.precond
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReferenceTable {
    pub cells: Vec<Cell>,
    pub policies: HashMap<(String, String), Policy>,
}

fn fields(line: &str) -> Result<HashMap<&str, &str>, String> {
    line.split_whitespace()
        .skip(1)
        .map(|kv| kv.split_once('=').ok_or_else(|| format!("expected key=value, found `{kv}`")))
        .collect()
}

impl ReferenceTable {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled reference table is well formed")
    }

    pub fn parse(text: &str) -> Result<Self, UsageError> {
        let mut table = ReferenceTable::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| UsageError(format!("reference line {}: {m}", lineno + 1));
            let f = fields(line).map_err(err)?;
            let get = |k: &str| f.get(k).copied().ok_or_else(|| err(format!("missing `{k}`")));
            let num = |k: &str| get(k).and_then(|v| parse_number(v).map_err(|e| err(e.0)));
            match line.split_whitespace().next() {
                Some("policy") => {
                    let key = (get("table")?.to_string(), get("precond")?.to_string());
                    table.policies.insert(key, Policy { abs: num("abs")?, rel: num("rel")? });
                }
                Some("cell") => {
                    let dt = match get("dt")? {
                        "steady" => None,
                        v => Some(parse_number(v).map_err(|e| err(e.0))?),
                    };
                    table.cells.push(Cell {
                        table: get("table")?.to_string(),
                        pair: parse_pair(get("elements")?).map_err(|e| err(e.0))?,
                        h: parse_h(get("h")?).map_err(|e| err(e.0))?,
                        re: num("re")?,
                        rho_ratio: num("rho")?,
                        mu_ratio: num("mu")?,
                        dt,
                        precond: get("precond")?.parse().map_err(|e: UsageError| err(e.0))?,
                        expected: get("expected")?.parse().map_err(|_| err("bad expected count".into()))?,
                    });
                }
                Some(other) => return Err(err(format!("unknown line kind `{other}`"))),
                None => {}
            }
        }
        for c in &table.cells {
            if table.policy(c).is_none() {
                return Err(UsageError(format!("no tolerance policy for {}", c.describe())));
            }
        }
        Ok(table)
    }

    pub fn policy(&self, cell: &Cell) -> Option<Policy> {
        self.policies.get(&(cell.table.clone(), cell.precond.to_string())).copied()
    }

    pub fn table_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for c in &self.cells {
            if !ids.contains(&c.table) {
                ids.push(c.table.clone());
            }
        }
        ids
    }

    /// Cells of the given tables (all tables when empty), coarse cells only
    /// unless `long` is set.
    pub fn select(&self, tables: &[String], long: bool) -> Vec<&Cell> {
        self.cells
            .iter()
            .filter(|c| tables.is_empty() || tables.iter().any(|t| t.eq_ignore_ascii_case(&c.table)))
            .filter(|c| long || !c.is_long())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub cell: Cell,
    pub tolerance: f64,
    /// Rounded average from the CSV; `None` when no row matches.
    pub got: Option<usize>,
}

impl Outcome {
    pub fn deviation(&self) -> Option<i64> {
        self.got.map(|g| g as i64 - self.cell.expected as i64)
    }

    pub fn pass(&self) -> Option<bool> {
        self.deviation().map(|d| (d.abs() as f64) <= self.tolerance)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ComparisonReport {
    pub outcomes: Vec<Outcome>,
}

impl ComparisonReport {
    pub fn count(&self, state: Option<bool>) -> usize {
        self.outcomes.iter().filter(|o| o.pass() == state).count()
    }

    pub fn all_pass(&self) -> bool {
        self.count(Some(false)) == 0
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            let line = match (o.pass(), o.got, o.deviation()) {
                (Some(p), Some(g), Some(d)) => format!(
                    "{} {}: expected {}, got {g}, deviation {d:+} (tolerance {})",
                    if p { "PASS" } else { "FAIL" },
                    o.cell.describe(),
                    o.cell.expected,
                    o.tolerance
                ),
                _ => format!("SKIP {}: no matching row (incomparable)", o.cell.describe()),
            };
            writeln!(out, "{line}").unwrap();
        }
        writeln!(
            out,
            "{} passed, {} failed, {} incomparable",
            self.count(Some(true)),
            self.count(Some(false)),
            self.count(None)
        )
        .unwrap();
        out
    }
}

/// Compares the rows against the selected cells.
pub fn compare(records: &[Record], reference: &ReferenceTable, tables: &[String], long: bool) -> ComparisonReport {
    let outcomes = reference
        .select(tables, long)
        .into_iter()
        .map(|cell| Outcome {
            cell: cell.clone(),
            tolerance: reference.policy(cell).map_or(0.0, |p| p.tolerance(cell.expected as f64)),
            got: records.iter().find(|r| cell.matches(r)).map(Record::rounded_avg),
        })
        .collect();
    ComparisonReport { outcomes }
}
