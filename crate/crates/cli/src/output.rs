use std::fmt::Display;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use crate::error::CliResult;

/// A CSV table with string cells, written as RFC 4180.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(BufWriter::new(File::create(path)?));
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Cell text; floats use the shortest representation that round-trips.
pub fn cell<T: Display>(v: T) -> String {
    v.to_string()
}

/// Row builder: `row![seed, n, value]`.
#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$($crate::output::cell($v)),*] };
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Build {
    pub version: &'static str,
    pub git_describe: &'static str,
}

pub const BUILD: Build = Build { version: env!("CARGO_PKG_VERSION"), git_describe: env!("RMT_LAB_GIT_DESCRIBE") };

#[derive(Debug, Serialize)]
pub struct Summary<'a, C: Serialize> {
    pub schema: u32,
    pub experiment: &'a str,
    pub build: &'a Build,
    pub config: &'a C,
    pub seeds: &'a [SeedRecord],
    pub files: Vec<&'static str>,
    pub metrics: &'a serde_json::Value,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
