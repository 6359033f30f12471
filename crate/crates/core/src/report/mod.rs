//! Persistent outputs of a study: the results table, configuration echo,
//! figures and the dominance summary.

pub mod config;
pub mod dominance;
pub mod figures;
pub mod results;
pub mod spline;
pub mod svg;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::montecarlo::StudyResult;

pub use config::{parse_config, read_config_file, render_config};
pub use dominance::{dominance_report, DominanceReport, PairCount};
pub use figures::{
    correlation_panel, emit_correlation_panel, emit_power_vs_measure, power_vs_measure,
    write_figures, CorrelationPanel, FigureKind, FigureSpec, Measure, PowerCurve, Smoothing,
};
pub use results::{read_results_csv, write_results_csv};
pub use spline::SmoothingSpline;

pub const RESULTS_FILE: &str = "results.csv";
pub const NULL_RESULTS_FILE: &str = "null_calibration.csv";
pub const DOMINANCE_FILE: &str = "dominance.txt";
pub const CONFIG_ECHO_FILE: &str = "config_echo.txt";

/// Writes every output of `result` into `dir`, creating it if needed.
pub fn write_study_outputs(result: &StudyResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let path = dir.join(RESULTS_FILE);
    write_results_csv(&result.distributions, &path)?;
    written.push(path);

    if !result.null_calibration.is_empty() {
        let path = dir.join(NULL_RESULTS_FILE);
        write_results_csv(&result.null_calibration, &path)?;
        written.push(path);
    }

    let path = dir.join(CONFIG_ECHO_FILE);
    std::fs::write(&path, render_config(&result.config)).map_err(|e| Error::io(&path, e))?;
    written.push(path);

    let path = dir.join(DOMINANCE_FILE);
    let report = dominance_report(&result.distributions);
    std::fs::write(&path, report.to_text()).map_err(|e| Error::io(&path, e))?;
    written.push(path);

    written.extend(write_figures(&result.distributions, result.config.alpha, dir)?);
    Ok(written)
}
