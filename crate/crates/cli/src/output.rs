use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::CliError;

/// One CSV artifact: a fixed header and rows of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Self { name: name.to_string(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn flag(ok: bool) -> String {
    if ok { "PASS" } else { "FAIL" }.to_string()
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", dir.display())))
}

/// Writes the tables into `dir`, or the first one to stdout when there is no directory.
pub fn emit(tables: &[Table], dir: Option<&Path>) -> Result<(), CliError> {
    match dir {
        Some(d) => {
            ensure_dir(d)?;
            for t in tables {
                let path = d.join(t.file_name());
                fs::write(&path, t.to_bytes()?)
                    .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            }
        }
        None => {
            if let Some(t) = tables.first() {
                let mut out = io::stdout().lock();
                out.write_all(&t.to_bytes()?).map_err(|e| CliError::Io(e.to_string()))?;
            }
        }
    }
    Ok(())
}

/// Run metadata kept apart from the data files so that those stay byte-stable.
pub fn write_sidecar(dir: &Path, command: &str, lines: &[(String, String)]) -> Result<(), CliError> {
    let mut text = String::new();
    for (k, v) in lines {
        text.push_str(&format!("{k} = {v}\n"));
    }
    let path = dir.join(format!("{command}.meta"));
    fs::write(&path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}
