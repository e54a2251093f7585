use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "scheme,h,dt,realizations,error1,error2,variance,avg_time_s,mem_proxy,peak_rss_mb,seed";

/// One `(scheme, h)` row of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub scheme: String,
    pub h: f64,
    pub dt: f64,
    pub realizations: usize,
    pub error1: f64,
    pub error2: f64,
    pub variance: f64,
    pub avg_time_s: f64,
    /// Largest active system over all windows and realizations, in dofs.
    pub mem_proxy: usize,
    pub peak_rss_mb: Option<f64>,
    pub seed: u64,
}

pub fn write_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Config("no records to write".into()));
    }
    let mut writer = csv::Writer::from_writer(out);
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    write_csv(records, std::fs::File::create(path)?)
}

pub fn read_csv_from<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header `{}`", header.join(","))));
    }
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<ExperimentRecord>> {
    read_csv_from(std::fs::File::open(path)?)
}
