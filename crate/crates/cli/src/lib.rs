//! Batch front end: TOML run configs in, JSON/CSV/text reports out.

pub mod config;
pub mod error;
pub mod ingest;
pub mod report;
pub mod run;

use std::path::{Path, PathBuf};

pub use config::{Config, Prepared};
pub use error::{CliError, CliResult};
pub use report::RunReport;

/// A configuration shipped with the tool.
pub struct BundledExample {
    pub file_name: &'static str,
    pub summary: &'static str,
    pub contents: &'static str,
}

pub const EXAMPLES: &[BundledExample] = &[
    BundledExample {
        file_name: "example1.cfg",
        summary: "shared linear model, mean shift mu = 2 on x1; generalized FANOVA credits -mu to Y|X",
        contents: include_str!("../configs/example1.cfg"),
    },
    BundledExample {
        file_name: "example2_ale.cfg",
        summary: "shared model x1*x2 on Gauss-Hermite normals, mu = 0.5; ALE credits +mu to Y|X",
        contents: include_str!("../configs/example2_ale.cfg"),
    },
];

fn base_dir(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Loads and validates a config without running any decomposition.
pub fn check_config(path: &Path) -> CliResult<Prepared> {
    Config::load(path)?.prepare(&base_dir(path))
}

/// Runs a config and writes its reports. `output_dir` overrides the
/// config's own output directory.
pub fn run_config(path: &Path, output_dir: Option<&Path>) -> CliResult<(RunReport, Vec<PathBuf>)> {
    let mut prepared = check_config(path)?;
    if let Some(dir) = output_dir {
        prepared.output_dir = dir.to_path_buf();
    }
    let report = run::execute(&prepared)?;
    let written = report::emit(&report, &prepared.formats, &prepared.output_dir)?;
    Ok((report, written))
}
