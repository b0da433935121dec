//! Command-line front end for the `sobolev-core` experiments.
//!
//! Every run produces one JSON report `{config, results, invariant_failures, version}`;
//! the sweep commands can emit their points as CSV instead.

pub mod config;
pub mod run;

use std::path::Path;

pub use config::{parse_config, Command, Format, RunConfig};
pub use run::{run, Report};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error(transparent)]
    Core(#[from] sobolev_core::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// The CSV path written next to a JSON report at `json_path`.
pub fn companion_csv_path(json_path: &Path) -> std::path::PathBuf {
    json_path.with_extension("csv")
}

/// Writes the report where the config asks. Returns whether every
/// invariant held.
pub fn emit(report: &Report) -> Result<bool, CliError> {
    let cfg = &report.config;
    let body = match cfg.format {
        Format::Json => report.to_json(),
        Format::Csv => report.csv.clone().unwrap_or_default(),
    };
    let write = |path: &Path, text: &str| {
        std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })
    };
    match &cfg.output_path {
        Some(path) => {
            write(path, &body)?;
            if cfg.format == Format::Json {
                if let Some(csv) = &report.csv {
                    write(&companion_csv_path(path), csv)?;
                }
            }
        }
        None => print!("{body}"),
    }
    Ok(report.passed())
}
