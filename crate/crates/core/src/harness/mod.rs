//! Convergence studies, slope fits, timing and CSV records.

mod bench;
mod fit;
mod record;
mod study;

pub use bench::{benchmark, peak_rss_mb, Benchmark};
pub use fit::{fit_slope, SlopeFit};
pub use record::{emit_csv, read_csv, read_csv_from, write_csv, ExperimentRecord, CSV_HEADER};
pub use study::{run_study, BaselineRecord, ExperimentSpec, Problem, StudyOutput};
