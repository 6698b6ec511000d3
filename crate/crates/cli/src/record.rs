use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub const CSV_HEADER: [&str; 14] = [
    "elements",
    "h",
    "re",
    "rho_ratio",
    "mu_ratio",
    "alpha",
    "dt",
    "precond",
    "picard_steps",
    "avg_gmres",
    "max_gmres",
    "final_nl_rel_residual",
    "wall_time_s",
    "converged",
];

/// One CSV row. `avg_gmres` is the exact mean over Picard steps; `dt` is
/// empty for steady runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub elements: String,
    pub h: f64,
    pub re: f64,
    pub rho_ratio: f64,
    pub mu_ratio: f64,
    pub alpha: u8,
    pub dt: Option<f64>,
    pub precond: String,
    pub picard_steps: usize,
    pub avg_gmres: f64,
    pub max_gmres: usize,
    pub final_nl_rel_residual: f64,
    pub wall_time_s: f64,
    pub converged: bool,
}

impl Record {
    /// Average rounded half-up, as printed in tables.
    pub fn rounded_avg(&self) -> usize {
        (self.avg_gmres + 0.5).floor() as usize
    }
}

/// Writes the header and then every record, even when there are none.
pub fn write_records<W: Write>(out: W, records: &[Record]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> csv::Result<Vec<Record>> {
    csv::Reader::from_reader(input).deserialize().collect()
}
