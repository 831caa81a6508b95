//! Versioned CSV tables: a `#schema=` line, a header row, then data rows.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use crate::error::CliResult;

pub struct Table {
    pub schema: &'static str,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: &'static str, header: &'static [&'static str]) -> Self {
        Self {
            schema,
            header,
            rows: vec![],
        }
    }

    pub fn write_to(&self, out: impl Write) -> CliResult<()> {
        let mut out = out;
        writeln!(out, "#schema={}", self.schema)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header)?;
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.header.len());
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Write text to `path`, or standard output when absent.
pub fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
    match path {
        Some(p) => {
            let mut f = io::BufWriter::new(File::create(p)?);
            write(&mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

/// A variable set as 1-based indices joined by ';'.
pub fn vars_cell(vars: &[usize]) -> String {
    let mut v: Vec<usize> = vars.iter().map(|i| i + 1).collect();
    v.sort_unstable();
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

pub fn opt_cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
