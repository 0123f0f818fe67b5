use std::io::Write;
use std::path::Path;

use breuilkit::Error;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: Value,
    pub tower: Value,
    pub result: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

/// Rows for `--format csv`. Only list commands produce them.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub struct Output {
    pub report: Report,
    pub table: Option<Table>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(Error::Guard { .. }) => 4,
            CliError::Lib(Error::Domain(_) | Error::UnsupportedTower(_) | Error::Dimension { .. }) => 3,
            CliError::Lib(Error::Invariant(_)) | CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

pub fn emit(out: &Output, csv_format: bool, path: Option<&Path>) -> Result<(), CliError> {
    let mut sink: Box<dyn Write> = match path {
        Some(p) => Box::new(std::fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    };
    if csv_format {
        let table = out
            .table
            .as_ref()
            .ok_or_else(|| CliError::Usage("csv output is only available for list commands".into()))?;
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(&table.header).map_err(|e| CliError::Io(e.into()))?;
        for row in &table.rows {
            w.write_record(row).map_err(|e| CliError::Io(e.into()))?;
        }
        w.flush()?;
    } else {
        serde_json::to_writer_pretty(&mut sink, &out.report).map_err(|e| CliError::Io(e.into()))?;
        writeln!(sink)?;
    }
    Ok(())
}
