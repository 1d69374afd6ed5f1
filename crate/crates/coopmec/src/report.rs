//! JSON and CSV report formats.

use std::io::{Read, Write};

use coopmec_core::montecarlo::{SweepReport, CSV_HEADER};
use coopmec_core::{Allocation, Feasibility};
use serde::{Deserialize, Serialize};

/// What `solve` prints when the feasibility gate fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibleReport {
    pub method: Allocation,
    pub feasibility: Feasibility,
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRecord {
    pub alpha: f64,
    pub d_pt_ap: f64,
    pub energy: f64,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub n_feasible: usize,
    pub n_total: usize,
}

pub fn write_json<T: Serialize>(value: &T, out: impl Write) -> serde_json::Result<()> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(serde_json::Error::io)
}

pub fn write_csv(report: &SweepReport, out: impl Write) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in report.csv_rows() {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(input: impl Read) -> csv::Result<Vec<CsvRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unexpected header {header:?}"),
        )));
    }
    r.deserialize().collect()
}
