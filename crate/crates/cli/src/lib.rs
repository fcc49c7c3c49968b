//! Batch front end: each subcommand runs one study and writes CSV tables
//! plus a JSON sidecar with the configuration, seed and version.

pub mod args;
mod commands;
mod report;

use std::fmt;

pub use args::{Cli, Command, Common};
pub use commands::copies;

/// Exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Config,
    Budget,
    Numerical,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Config => 2,
            ExitKind::Budget => 3,
            ExitKind::Numerical => 4,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ExitKind::Config => "config",
            ExitKind::Budget => "budget",
            ExitKind::Numerical => "numerical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ExitKind,
    pub reason: String,
}

impl CliError {
    pub fn config(reason: impl Into<String>) -> Self {
        CliError {
            kind: ExitKind::Config,
            reason: reason.into(),
        }
    }
}

/// One line: `error kind=<kind> reason=<quoted reason>`.
impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let reason = self.reason.replace('\n', " ");
        write!(f, "error kind={} reason={:?}", self.kind.name(), reason)
    }
}

impl From<qmoments::Error> for CliError {
    fn from(e: qmoments::Error) -> Self {
        let kind = match e {
            qmoments::Error::Numerical(_) => ExitKind::Numerical,
            _ => ExitKind::Config,
        };
        CliError { kind, reason: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::config(format!("output: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::config(format!("output: {e}"))
    }
}

/// Runs one invocation and returns the paths written.
pub fn run(cli: &Cli) -> Result<Vec<std::path::PathBuf>, CliError> {
    let seed = cli
        .common
        .seed
        .ok_or_else(|| CliError::config("--seed is required"))?;
    if cli.common.threads == Some(0) {
        return Err(CliError::config("--threads must be at least 1"));
    }
    std::fs::create_dir_all(&cli.common.out)?;
    let needed = copies(&cli.command)?;
    eprintln!("copies: {needed}");
    if needed > cli.common.budget {
        return Err(CliError {
            kind: ExitKind::Budget,
            reason: format!("run needs {needed} prepared copies, budget is {}", cli.common.budget),
        });
    }
    qmoments::sim::with_threads(cli.common.threads, || commands::execute(&cli.command, seed, needed, &cli.common.out))?
}
