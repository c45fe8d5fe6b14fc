//! Scenario configuration, runner, figure recipes and artifact writers.

mod config;
mod figures;
mod runner;

pub use config::{
    Analysis, AnalysisOptions, EquilibriumOptions, ModelParams, PoaOptions, Resolved, ScenarioConfig,
    SimulateOptions, SpectrumOptions, SweepFamily, SweepOptions, Topology, TraceOptions,
};
pub use figures::{fig_repro, Figure};
pub use runner::{parse_input, run, sweep_family, RunReport};

use std::fs;
use std::path::Path;

use crate::Result;

/// Scientific notation, 9 significant digits.
pub fn fmt9(v: f64) -> String {
    format!("{v:.8e}")
}

/// Write to a temp file next to `path`, then rename over it.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// CSV with a mandatory header; numeric cells go through [`fmt9`].
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&v| fmt9(v)).collect());
    }

    /// Columns given as equal-length series.
    pub fn from_columns(header: Vec<String>, cols: &[&[f64]]) -> Self {
        let n = cols.iter().map(|c| c.len()).min().unwrap_or(0);
        let mut t = Table { header, rows: Vec::with_capacity(n) };
        for k in 0..n {
            t.rows.push(cols.iter().map(|c| fmt9(c[k])).collect());
        }
        t
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        atomic_write(path, &self.to_bytes()?)
    }
}

/// Read a CSV written by [`Table::write`] back as (header, numeric rows).
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rd = csv::Reader::from_path(path)?;
    let header = rd.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        rows.push(rec.iter().map(|s| s.parse().unwrap_or(f64::NAN)).collect());
    }
    Ok((header, rows))
}
