//! Configuration-driven Monte Carlo harness for regularized likelihood
//! estimators: draws a true parameter, samples replicates, chooses `r`, fits,
//! checks the oracle inequality per replicate and writes CSV, JSON and SVG
//! outputs.

pub mod config;
pub mod design;
pub mod error;
pub mod plot;
pub mod report;
pub mod runner;
pub mod truth;

use std::path::Path;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use report::{load_report, parse_report, ReplicateRecord, SimulationReport};
pub use runner::{check_oracle_bound, Experiment};

/// Writes `replicates.csv`, `report.json` and `plots/*.svg` under `dir`.
pub fn emit_outputs(report: &SimulationReport, dir: &Path) -> Result<()> {
    let plots = dir.join("plots");
    std::fs::create_dir_all(&plots).map_err(|e| HarnessError::io(&plots, e))?;
    let write = |name: &Path, contents: String| std::fs::write(name, contents).map_err(|e| HarnessError::io(name, e));
    write(&dir.join("replicates.csv"), report.to_csv()?)?;
    write(&dir.join("report.json"), report.to_json()?)?;
    write(&plots.join("kl_histogram.svg"), plot::kl_histogram(report))?;
    write(&plots.join("noise_dual.svg"), plot::noise_dual_plot(report))?;
    write(&plots.join("bound_vs_loss.svg"), plot::bound_vs_loss(report))?;
    Ok(())
}
