//! Experiment runner for the `semiwave` library.
//!
//! `run` parses the command line, merges the optional TOML config, executes
//! one subcommand and writes a JSON report, CSV series named after the
//! operations that produced them, and a gnuplot script.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation failure, 3 numerical
//! failure (blow-up outside a sweep, Picard non-convergence, ray drift,
//! resource exhaustion, failed self-test).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use clap::{CommandFactory, Parser};

pub use args::{Cli, Command, ConfigFile};
pub use output::{RunReport, Table};

/// Environment variable overriding the output directory of the config file.
pub const OUTPUT_DIR_ENV: &str = "SEMIWAVE_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "semiwave-out";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Validation(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Validation(m) => write!(f, "validation failed: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<semiwave::Error> for CliError {
    fn from(e: semiwave::Error) -> Self {
        use semiwave::Error::*;
        match e {
            Blowup { .. } | NoConvergence { .. } | ConstraintDrift { .. } | Resource(_) => {
                Self::Numerical(e.to_string())
            }
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Validation(format!("i/o: {e}"))
    }
}

/// Usage error for a parameter that has no default and was not given.
pub(crate) fn missing(subcommand: &str, flag: &str) -> CliError {
    let mut cmd = Cli::command();
    let usage = cmd
        .find_subcommand_mut(subcommand)
        .map(|c| c.render_usage().to_string().replacen("Usage: ", "Usage: semiwave ", 1))
        .unwrap_or_default();
    CliError::Usage(format!("--{flag} is required (flag or `[{subcommand}]` table of the config file)\n\n{usage}"))
}

fn load_config(path: Option<&PathBuf>) -> Result<(ConfigFile, Option<(PathBuf, String)>), CliError> {
    let Some(path) = path else {
        return Ok((ConfigFile::default(), None));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: ConfigFile =
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
    Ok((cfg, Some((path.clone(), text))))
}

fn output_dir(cli: &Cli, file: &ConfigFile) -> PathBuf {
    cli.output_dir
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| file.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (file, config_text) = load_config(cli.config.as_ref())?;
    let seed = cli.seed.or(file.seed).unwrap_or(1);
    let threads = cli.threads.or(file.threads);
    let dir = output_dir(&cli, &file);
    let name = cli.command.name();
    let command = cli.command.resolve(&file);

    let start = Instant::now();
    let work = || commands::dispatch(&command, seed);
    let outcome = match threads {
        Some(0) => return Err(CliError::Validation("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }?;
    let report = RunReport::new(name, seed, threads, command.echo(), config_text, start.elapsed().as_secs_f64());
    let failure = output::persist(&dir, report, outcome, !cli.no_plot)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Runs the command line `argv` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("semiwave: {e}");
            e.exit_code()
        }
    }
}
