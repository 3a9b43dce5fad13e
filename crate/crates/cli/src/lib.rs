//! `noteval`: batch scoring, reference scores, ensembles, correlation
//! reports and annotator agreement over clinical-note datasets.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error, 3 partial
//! success (some pairs failed and were recorded in the run manifest).

use std::ffi::OsString;
use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
mod output;

/// Invalid or incomplete configuration, detected before any output is
/// written.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Shorthand for `Err(ConfigError(..).into())`.
#[macro_export]
macro_rules! config_bail {
    ($($arg:tt)*) => {
        return Err(anyhow::Error::new($crate::ConfigError(format!($($arg)*))))
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Some pairs or columns failed; details are in the manifest.
    Partial,
}

impl Outcome {
    pub fn exit_code(self) -> ExitCode {
        match self {
            Outcome::Success => ExitCode::SUCCESS,
            Outcome::Partial => ExitCode::from(3),
        }
    }
}

pub fn exit_code(err: &anyhow::Error) -> ExitCode {
    if err.is::<ConfigError>() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

#[derive(Debug, Parser)]
#[command(name = "noteval", version, about = "Evaluate generated clinical notes and meta-evaluate metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every pair of a dataset with the requested metrics.
    Score(Box<commands::score::ScoreArgs>),
    /// Derive per-pair reference criteria from human annotations.
    Refscores(commands::refscores::RefscoresArgs),
    /// Z-score ensemble of columns in a score table.
    Ensemble(commands::ensemble::EnsembleArgs),
    /// Correlate metric columns with reference criteria.
    Correlate(commands::correlate::CorrelateArgs),
    /// Average several correlation reports cell by cell.
    Average(commands::average::AverageArgs),
    /// Averaged pairwise inter-annotator agreement.
    Iaa(commands::iaa::IaaArgs),
    /// Check that an input file parses and satisfies its invariants.
    Validate(commands::validate::ValidateArgs),
}

/// Parses arguments; usage errors map to exit code 1, help and version
/// to 0.
pub fn parse_args<I, T>(args: I) -> Result<Cli, ExitCode>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(args).map_err(|e| {
        let _ = e.print();
        if e.use_stderr() {
            ExitCode::from(1)
        } else {
            ExitCode::SUCCESS
        }
    })
}

pub fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Score(args) => commands::score::run(*args),
        Command::Refscores(args) => commands::refscores::run(args),
        Command::Ensemble(args) => commands::ensemble::run(args),
        Command::Correlate(args) => commands::correlate::run(args),
        Command::Average(args) => commands::average::run(args),
        Command::Iaa(args) => commands::iaa::run(args),
        Command::Validate(args) => commands::validate::run(args),
    }
}
