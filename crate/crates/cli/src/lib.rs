//! Single runs, parameter sweeps and reference comparisons for the two-phase
//! cavity benchmark.

pub mod markdown;
pub mod params;
pub mod record;
pub mod reference;
pub mod sweep;

pub use params::{parse_h, parse_list, parse_number, Point, Precond, RunOptions, UsageError};
pub use record::{read_records, write_records, Record, CSV_HEADER};
pub use reference::{compare, ComparisonReport, ReferenceTable};
pub use sweep::{run_point, run_points, SweepSpec};
