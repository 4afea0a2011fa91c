//! Report, CSV and plot-script persistence. Writing is sequential and happens
//! after the computation, so file contents depend only on the results.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// A CSV series; the file is `<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    fn write(&self, path: &Path) -> Result<(), CliError> {
        let io = |e: csv::Error| CliError::Validation(format!("writing {}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip text of `x`, in exponent form outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Everything a subcommand produces.
#[derive(Debug, Default)]
pub struct Outcome {
    pub results: Value,
    pub tables: Vec<Table>,
    /// Gnuplot script body, referring to the CSV files by name.
    pub plot: Option<String>,
    /// Extra binary files (snapshots).
    pub files: Vec<(String, Vec<u8>)>,
    /// Failure to report after the outputs are written.
    pub failure: Option<CliError>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigSource {
    pub path: String,
    pub text: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Effective parameters after merging flags, config file and defaults.
    pub config: Value,
    /// The config file verbatim, when one was given.
    pub config_file: Option<ConfigSource>,
    pub wall_seconds: f64,
    pub status: String,
    pub outputs: Vec<String>,
    pub results: Value,
}

impl RunReport {
    pub fn new(
        subcommand: &'static str,
        seed: u64,
        threads: Option<usize>,
        config: Value,
        config_file: Option<(std::path::PathBuf, String)>,
        wall_seconds: f64,
    ) -> Self {
        Self {
            tool: "semiwave",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            seed,
            threads,
            config,
            config_file: config_file.map(|(p, text)| ConfigSource { path: p.display().to_string(), text }),
            wall_seconds,
            status: "ok".into(),
            outputs: Vec::new(),
            results: Value::Null,
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}_report.json", self.subcommand)
    }
}

/// Writes every output of `outcome` into `dir`, prints the report to stdout
/// and hands back the deferred failure, if any.
pub(crate) fn persist(dir: &Path, mut report: RunReport, outcome: Outcome, plot: bool) -> Result<Option<CliError>, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Validation(format!("cannot create output directory {}: {e}", dir.display())))?;
    for table in &outcome.tables {
        table.write(&dir.join(table.file_name()))?;
        report.outputs.push(table.file_name());
    }
    for (name, bytes) in &outcome.files {
        fs::write(dir.join(name), bytes)?;
        report.outputs.push(name.clone());
    }
    if let (true, Some(script)) = (plot, &outcome.plot) {
        let name = format!("{}.gp", report.subcommand);
        fs::write(dir.join(&name), script)?;
        report.outputs.push(name);
    }
    if let Some(e) = &outcome.failure {
        report.status = e.to_string();
    }
    report.results = outcome.results;
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Validation(e.to_string()))?;
    fs::write(dir.join(report.file_name()), &json)?;
    println!("{json}");
    Ok(outcome.failure)
}
