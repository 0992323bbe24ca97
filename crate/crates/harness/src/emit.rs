//! CSV and JSON artifacts.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::SweepConfig;
use crate::error::{HarnessError, Result};
use crate::record::ExperimentRecord;

pub const CSV_COLUMNS: [&str; 11] = [
    "experiment",
    "lambda",
    "delta_num",
    "delta_den",
    "trial",
    "seed",
    "value_name",
    "value",
    "predicted_exponent",
    "normalized",
    "walltime_ms",
];

pub const FORMAT_VERSION: &str = "1";

/// One row per named value. Cells that failed contribute a single
/// `error` row with an empty value.
pub fn write_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in records {
        let head = [
            r.experiment.id().to_string(),
            r.lambda.to_string(),
            r.delta_num.to_string(),
            r.delta_den.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
        ];
        let tail = [
            fmt_f64(r.predicted_exponent),
            r.normalized.map(fmt_f64).unwrap_or_default(),
            r.walltime_ms.to_string(),
        ];
        let mut emit = |name: &str, value: String| {
            let row: Vec<String> = head
                .iter()
                .cloned()
                .chain([name.to_string(), value])
                .chain(tail.iter().cloned())
                .collect();
            w.write_record(&row)
        };
        if r.error.is_some() {
            emit("error", String::new()).map_err(csv_err)?;
        } else {
            for v in &r.values {
                emit(&v.name, fmt_f64(v.value)).map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Io(e.to_string())
}

pub fn write_csv_file(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    write_csv(records, std::io::BufWriter::new(f))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub version: String,
    pub config: SweepConfig,
    /// Ledger evaluated at the sweep's δ.
    pub ledger: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub header: ReportHeader,
    pub records: Vec<ExperimentRecord>,
}

impl Report {
    pub fn new(config: &SweepConfig, records: Vec<ExperimentRecord>) -> Result<Self> {
        let ledger = match paraproduct_core::ledger::ledger_report(config.delta) {
            Ok(r) => serde_json::to_value(r).map_err(|e| HarnessError::Io(e.to_string()))?,
            Err(_) => serde_json::Value::Null,
        };
        Ok(Self {
            header: ReportHeader {
                version: FORMAT_VERSION.to_string(),
                config: config.clone(),
                ledger,
            },
            records,
        })
    }
}

pub fn write_json_file(report: &Report, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), report).map_err(|e| HarnessError::Io(e.to_string()))
}

pub fn read_json_file(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Io(e.to_string()))
}
