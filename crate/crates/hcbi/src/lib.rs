//! Experiment runner for the `hawkes-cbi` library.
//!
//! A run reads one JSON configuration, executes the named experiment and
//! writes CSV tables, a text summary, a gnuplot script and a manifest into
//! an output directory. The report passes when every check passes.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod report;

use std::path::{Path, PathBuf};

pub use config::{parse_config, ExperimentConfig, ExperimentKind};
pub use error::{Error, Result};
pub use report::Report;

use output::OutputDir;

/// Exit code of a run whose report has a failing check.
pub const EXIT_REPORT_FAILED: i32 = 1;

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_config(&text)?)
}

/// Where a run writes: `--out`, else the config's `output.dir`, else
/// `results/<name>`.
pub fn output_dir(cfg: &ExperimentConfig, cli: Option<&Path>) -> PathBuf {
    match (cli, &cfg.output) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(o)) => PathBuf::from(&o.dir),
        (None, None) => PathBuf::from("results").join(cfg.display_name()),
    }
}

/// Runs the experiment and writes its artifacts into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Report> {
    let report = experiments::execute(cfg)?;
    let dir = OutputDir::create(out)?;
    report.write(cfg, &dir)?;
    Ok(report)
}
