//! Markdown tables in the layout of the published results: one cell per
//! parameter pair holding the rounded averages of each preconditioner,
//! separated by " / ".

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::record::Record;

/// Close-enough float key for grouping.
fn key(x: f64) -> i64 {
    (x.ln() * 1e6).round() as i64
}

pub fn format_h(h: f64) -> String {
    let inv = 1.0 / h;
    if (inv - inv.round()).abs() < 1e-9 * inv && inv >= 1.0 {
        format!("1/{}", inv.round())
    } else {
        format!("{h}")
    }
}

pub fn format_re(re: f64) -> String {
    let e = re.log10();
    if (2.0 * e - (2.0 * e).round()).abs() < 1e-9 && (e - e.round()).abs() > 1e-9 {
        format!("10^{:.1}", e)
    } else {
        format_plain(re)
    }
}

fn format_plain(x: f64) -> String {
    if x == x.round() && x.abs() < 1e6 {
        format!("{}", x as i64)
    } else if x.abs() < 0.1 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn format_dt(dt: Option<f64>) -> String {
    match dt {
        None => "steady".into(),
        Some(d) if d < 1.0 => format_h(d),
        Some(d) => format_plain(d),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Layout {
    /// rows mu, columns rho
    Ratios,
    /// rows dt, columns Re
    TimeStep,
    /// rows h, columns Re
    Grid,
}

fn distinct<T: Ord>(items: impl Iterator<Item = T>) -> usize {
    items.collect::<std::collections::BTreeSet<_>>().len()
}

/// Renders `records`, with preconditioners in `order` inside each cell.
pub fn render(records: &[Record], order: &[String]) -> String {
    let layout = if distinct(records.iter().map(|r| (key(r.rho_ratio), key(r.mu_ratio)))) > 1 {
        Layout::Ratios
    } else if distinct(records.iter().map(|r| r.dt.map(key))) > 1 {
        Layout::TimeStep
    } else {
        Layout::Grid
    };

    // group -> (row, column) -> precond -> record
    type Cells<'a> = BTreeMap<(i64, i64), BTreeMap<String, &'a Record>>;
    let mut groups: BTreeMap<(String, i64, i64, i64, i64), (String, Cells)> = BTreeMap::new();
    let mut row_labels: BTreeMap<i64, String> = BTreeMap::new();
    let mut col_labels: BTreeMap<i64, String> = BTreeMap::new();
    for r in records {
        let dt_key = r.dt.map_or(i64::MAX, key);
        let (group, title, row, col) = match layout {
            Layout::Ratios => (
                (r.elements.clone(), -key(r.h), key(r.re), dt_key, 0),
                format!("{}, h = {}, Re = {}, {}", r.elements, format_h(r.h), format_re(r.re), format_dt(r.dt)),
                (key(r.mu_ratio), format_plain(r.mu_ratio)),
                (key(r.rho_ratio), format_plain(r.rho_ratio)),
            ),
            Layout::TimeStep => (
                (r.elements.clone(), -key(r.h), key(r.rho_ratio), key(r.mu_ratio), 0),
                format!(
                    "{}, h = {}, rho = {}, mu = {}",
                    r.elements,
                    format_h(r.h),
                    format_plain(r.rho_ratio),
                    format_plain(r.mu_ratio)
                ),
                (-dt_key, format_dt(r.dt)),
                (key(r.re), format_re(r.re)),
            ),
            Layout::Grid => (
                (r.elements.clone(), key(r.rho_ratio), key(r.mu_ratio), dt_key, 0),
                format!(
                    "{}, rho = {}, mu = {}, {}",
                    r.elements,
                    format_plain(r.rho_ratio),
                    format_plain(r.mu_ratio),
                    format_dt(r.dt)
                ),
                (-key(r.h), format_h(r.h)),
                (key(r.re), format_re(r.re)),
            ),
        };
        row_labels.insert(row.0, row.1);
        col_labels.insert(col.0, col.1);
        let entry = groups.entry(group).or_insert_with(|| (title, BTreeMap::new()));
        entry.1.entry((row.0, col.0)).or_default().insert(r.precond.clone(), r);
    }

    let row_name = match layout {
        Layout::Ratios => "mu \\ rho",
        Layout::TimeStep => "dt \\ Re",
        Layout::Grid => "h \\ Re",
    };
    let mut out = String::new();
    let mut any_failed = false;
    for (title, cells) in groups.values() {
        let rows: Vec<i64> = row_labels.keys().copied().filter(|k| cells.keys().any(|c| c.0 == *k)).collect();
        let cols: Vec<i64> = col_labels.keys().copied().filter(|k| cells.keys().any(|c| c.1 == *k)).collect();
        let present: Vec<&String> = order.iter().filter(|p| cells.values().any(|m| m.contains_key(*p))).collect();
        writeln!(out, "**{title}** ({})\n", present.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" / ")).unwrap();
        write!(out, "| {row_name} |").unwrap();
        for c in &cols {
            write!(out, " {} |", col_labels[c]).unwrap();
        }
        write!(out, "\n|---|").unwrap();
        for _ in &cols {
            write!(out, "---|").unwrap();
        }
        out.push('\n');
        for r in &rows {
            write!(out, "| {} |", row_labels[r]).unwrap();
            for c in &cols {
                let cell = match cells.get(&(*r, *c)) {
                    Some(m) => present
                        .iter()
                        .map(|p| match m.get(*p) {
                            Some(rec) if rec.converged => rec.rounded_avg().to_string(),
                            Some(rec) => {
                                any_failed = true;
                                format!("{}\u{2020}", rec.rounded_avg())
                            }
                            None => "-".into(),
                        })
                        .collect::<Vec<_>>()
                        .join(" / "),
                    None if layout == Layout::Ratios && *c > *r => "\u{22c6}".into(),
                    None => String::new(),
                };
                write!(out, " {cell} |").unwrap();
            }
            out.push('\n');
        }
        out.push('\n');
    }
    if any_failed {
        out.push_str("\u{2020} nonlinear iteration stopped before convergence\n");
    }
    out
}
