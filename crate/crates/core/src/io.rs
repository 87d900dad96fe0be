//! CSV input and output.
//!
//! Columns (header required, any order): `time`, `censor` (1 = censored,
//! 0 = event), `cohort`, `population` (1 or 2). Extra columns are ignored
//! with a warning.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::dataset::{Dataset, Observation};
use crate::error::{Error, Result};

const REQUIRED: [&str; 4] = ["time", "censor", "cohort", "population"];

const LUNG_ECOG: &str = include_str!("../data/lung_ecog.csv");

/// Observations read from CSV, plus non-fatal warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvInput {
    pub observations: Vec<Observation>,
    pub warnings: Vec<String>,
}

fn parse_error(row: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        message: message.into(),
    }
}

pub fn read_csv<R: Read>(reader: R) -> Result<CsvInput> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_error(0, format!("cannot read header: {e}")))?
        .clone();
    let mut columns = [0usize; 4];
    for (slot, name) in columns.iter_mut().zip(REQUIRED) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_error(0, format!("missing required column `{name}`")))?;
    }
    let warnings = headers
        .iter()
        .filter(|h| !REQUIRED.contains(h))
        .map(|h| format!("ignoring unknown column `{h}`"))
        .collect();

    let mut observations = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| parse_error(row, e.to_string()))?;
        let field = |k: usize| record.get(columns[k]).unwrap_or("");
        let time: f64 = field(0)
            .parse()
            .map_err(|_| parse_error(row, format!("time `{}` is not a number", field(0))))?;
        let event = match field(1) {
            "0" => true,
            "1" => false,
            other => return Err(parse_error(row, format!("censor `{other}` must be 0 or 1"))),
        };
        let cohort = field(2);
        if cohort.is_empty() {
            return Err(parse_error(row, "empty cohort label"));
        }
        let population: u8 = match field(3) {
            "1" => 1,
            "2" => 2,
            other => {
                return Err(parse_error(
                    row,
                    format!("population `{other}` must be 1 or 2"),
                ))
            }
        };
        if !(time > 0.0) || !time.is_finite() {
            return Err(parse_error(
                row,
                format!("time {time} must be positive and finite"),
            ));
        }
        observations.push(Observation::new(time, event, cohort, population));
    }
    Ok(CsvInput {
        observations,
        warnings,
    })
}

pub fn read_csv_path(path: impl AsRef<Path>) -> Result<CsvInput> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file)
}

pub fn write_csv<W: Write>(writer: W, observations: &[Observation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(REQUIRED).map_err(io)?;
    for o in observations {
        w.write_record([
            o.time.to_string(),
            if o.event { "0" } else { "1" }.to_string(),
            o.cohort.clone(),
            o.population.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Names of the bundled fixtures.
pub const FIXTURES: [&str; 1] = ["lung"];

/// NCCTG lung cancer survival (days) by ECOG score (cohorts 0, 1, 2),
/// population 1 = male, 2 = female. One subject with missing ECOG and the
/// single ECOG-3 subject are excluded.
pub fn lung_fixture() -> Result<Dataset> {
    fixture("lung")
}

pub fn fixture(name: &str) -> Result<Dataset> {
    match name {
        "lung" => Dataset::validate(read_csv(LUNG_ECOG.as_bytes())?.observations),
        other => Err(Error::Domain(format!(
            "unknown fixture `{other}` (available: {})",
            FIXTURES.join(", ")
        ))),
    }
}

/// On-disk location of a bundled fixture, for tools that want a file path.
pub fn fixture_path(name: &str) -> Option<PathBuf> {
    (name == "lung").then(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("data/lung_ecog.csv"))
}
