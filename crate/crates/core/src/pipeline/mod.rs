//! Pipeline orchestration behind the `pvforecast` binary: configuration,
//! the synthetic data generator, one function per subcommand, and the
//! artifact manifest.
//!
//! Every subcommand reads and writes under one output directory:
//!
//! ```text
//! synth/     power.csv weather_obs.csv weather_fcst.csv
//! ingest/    canonical hourly series, elevation.csv, report.json
//! features/  correlations.csv lag_autocorrelation.csv
//! model/     ensemble.json training_log.json [grid.csv]
//! forecast/  runs_perfect.csv runs_nwp.csv runs_weather.csv
//! eval/      summary.json, per-lead errors/fits/Q–Q, autocorrelation
//! report.txt
//! manifest.json
//! ```

mod commands;
mod config;
mod manifest;
mod render;
mod runs;
mod synth;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::distfit::DistError;
use crate::erroranalysis::AnalysisError;
use crate::ingest::IngestError;
use crate::plantmodel::ModelError;

pub use self::commands::{
    cmd_eval, cmd_features, cmd_forecast, cmd_ingest, cmd_report, cmd_synth, cmd_train, ForecastMode, Workspace,
};
pub use self::config::{
    DataConfig, EvalConfig, GridConfig, IngestConfig, ModelConfig, PipelineConfig, SiteConfig, WeatherColumn,
};
pub use self::manifest::{write_manifest, Manifest, ManifestEntry, OutputLock, MANIFEST_VERSION};
pub use self::render::{render_decomposition, render_lead_table, EvalSummary, LeadRow, ModeSummary};
pub use self::runs::{read_runs_csv, write_runs_csv};
pub use self::synth::{clear_sky_ghi, generate, SyntheticData, SyntheticScenario, WeatherTable};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("model: {0}")]
    Model(String),
}

impl PipelineError {
    /// 2 config, 3 data, 4 model.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Data(_) => 3,
            PipelineError::Model(_) => 4,
        }
    }

    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        PipelineError::Data(format!("{}: {e}", path.display()))
    }
}

impl From<IngestError> for PipelineError {
    fn from(e: IngestError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<ModelError> for PipelineError {
    fn from(e: ModelError) -> Self {
        PipelineError::Model(e.to_string())
    }
}

impl From<AnalysisError> for PipelineError {
    fn from(e: AnalysisError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<DistError> for PipelineError {
    fn from(e: DistError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

pub(crate) fn create_parent(path: &Path) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    Ok(())
}

/// Creates `path` (and parents) and hands a buffered writer to `f`.
pub(crate) fn write_file<F>(path: &Path, f: F) -> Result<(), PipelineError>
where
    F: FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>,
{
    use std::io::Write;
    create_parent(path)?;
    let file = std::fs::File::create(path).map_err(|e| PipelineError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| PipelineError::io(path, e))
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::io(path, e))?;
    text.push('\n');
    write_file(path, |w| std::io::Write::write_all(w, text.as_bytes()))
}

pub(crate) fn require(path: PathBuf, hint: &str) -> Result<PathBuf, PipelineError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(PipelineError::Data(format!("{} not found; run `{hint}` first", path.display())))
    }
}
