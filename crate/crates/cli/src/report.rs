use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// Report files kept in memory and written together at the end of a run.
#[derive(Debug, Default)]
pub struct Report {
    files: Vec<(String, Vec<u8>)>,
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

impl Report {
    pub fn files(&self) -> &[(String, Vec<u8>)] {
        &self.files
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(io)?;
        bytes.push(b'\n');
        self.files.push((name.into(), bytes));
        Ok(())
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.serialize(row).map_err(io)?;
        }
        self.files.push((name.into(), w.into_inner().map_err(io)?));
        Ok(())
    }

    /// Like [`Report::csv`] but the header is written explicitly, so an empty
    /// table still carries its column names.
    pub fn csv_with_header<T: Serialize>(&mut self, name: &str, rows: &[T], columns: &[&str]) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(columns).map_err(io)?;
        for row in rows {
            w.serialize(row).map_err(io)?;
        }
        self.files.push((name.into(), w.into_inner().map_err(io)?));
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}
