use std::path::{Path, PathBuf};

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::synth::SyntheticScenario;
use super::PipelineError;
use crate::ingest::{SiteMeta, Unit, WindowSpec};
use crate::plantmodel::{MlpConfig, TrainParams};
use crate::solarpos::TimeAnchor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteConfig {
    pub latitude: f64,
    pub longitude: f64,
    pub peak_power_w: f64,
    #[serde(default)]
    pub utc_offset: i32,
}

impl SiteConfig {
    pub fn meta(&self) -> Result<SiteMeta, PipelineError> {
        SiteMeta::new(self.latitude, self.longitude, self.peak_power_w, self.utc_offset)
            .map_err(|e| PipelineError::Config(format!("site: {e}")))
    }
}

/// One weather variable, present under the same column name in the
/// observation and forecast files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherColumn {
    pub column: String,
    pub unit: Unit,
}

/// Input files. Relative paths resolve against the config file's directory.
/// Without this section the files written by `synth` are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub power: PathBuf,
    pub observations: PathBuf,
    pub forecasts: PathBuf,
    #[serde(default = "default_timestamp_column")]
    pub timestamp_column: String,
    #[serde(default = "default_power_column")]
    pub power_column: String,
    #[serde(default = "default_weather")]
    pub weather: Vec<WeatherColumn>,
}

fn default_timestamp_column() -> String {
    "timestamp".into()
}

fn default_power_column() -> String {
    "power_w".into()
}

fn default_weather() -> Vec<WeatherColumn> {
    vec![
        WeatherColumn {
            column: "ghi".into(),
            unit: Unit::WattPerM2,
        },
        WeatherColumn {
            column: "temp_air".into(),
            unit: Unit::Celsius,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub outlier_factor: f64,
    pub issue_hour_utc: u32,
    pub elevation_anchor: TimeAnchor,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            outlier_factor: 1.5,
            issue_hour_utc: 6,
            elevation_anchor: TimeAnchor::Midpoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub enabled: bool,
    pub folds: usize,
    /// Candidate hidden layouts; empty means the default search space.
    pub hidden: Vec<Vec<usize>>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            folds: 5,
            hidden: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub h: usize,
    pub f: usize,
    pub hidden: Vec<usize>,
    pub ensemble_size: usize,
    /// Train on windows ending before this instant, test on those after.
    pub split_date: Option<DateTime<Utc>>,
    pub night_filter: bool,
    pub train: TrainParams,
    pub grid: GridConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            h: 24,
            f: 24,
            hidden: vec![90, 80],
            ensemble_size: 200,
            split_date: None,
            night_filter: false,
            train: TrainParams::default(),
            grid: GridConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// First and last 1-based lead that get distribution fits.
    pub fit_leads: [usize; 2],
    pub min_fit_samples: usize,
    pub max_distance: usize,
    pub min_pairs: usize,
    /// Write Q–Q point files for fitted leads.
    pub qq: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            fit_leads: [6, 20],
            min_fit_samples: 16,
            max_distance: 12,
            min_pairs: 30,
            qq: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    pub site: SiteConfig,
    #[serde(default)]
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub ingest: IngestConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub synth: SyntheticScenario,
    /// Directory that relative data paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut c: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        c.base_dir = base_dir.to_path_buf();
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::from_toml(&text, &base).map_err(|e| match e {
            PipelineError::Config(m) => PipelineError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        self.site.meta()?;
        if !(self.ingest.outlier_factor > 1.0) {
            return bad(format!("ingest.outlier_factor must exceed 1, got {}", self.ingest.outlier_factor));
        }
        if self.ingest.issue_hour_utc > 23 {
            return bad(format!("ingest.issue_hour_utc must be 0..=23, got {}", self.ingest.issue_hour_utc));
        }
        let m = &self.model;
        if m.h == 0 || m.f == 0 {
            return bad("model.h and model.f must be at least 1".into());
        }
        if m.ensemble_size == 0 {
            return bad("model.ensemble_size must be at least 1".into());
        }
        if m.grid.enabled && m.grid.folds < 2 {
            return bad("model.grid.folds must be at least 2".into());
        }
        if let Some(t) = m.split_date {
            if t.timestamp() % 3600 != 0 {
                return bad(format!("model.split_date {t} is not on the hour"));
            }
        }
        self.mlp_config(self.weather_columns().len())?;
        let [a, b] = self.eval.fit_leads;
        if a == 0 || a > b || b > m.f {
            return bad(format!("eval.fit_leads [{a}, {b}] must lie within 1..={}", m.f));
        }
        if let Some(d) = &self.data {
            if d.weather.is_empty() {
                return bad("data.weather lists no columns".into());
            }
        }
        self.synth.validate()
    }

    pub fn window_spec(&self) -> WindowSpec {
        WindowSpec {
            history: self.model.h,
            horizon: self.model.f,
            issue_hour_utc: self.ingest.issue_hour_utc,
        }
    }

    pub fn weather_columns(&self) -> Vec<WeatherColumn> {
        self.data.as_ref().map_or_else(default_weather, |d| d.weather.clone())
    }

    pub fn mlp_config(&self, n_weather: usize) -> Result<MlpConfig, PipelineError> {
        let mut c = MlpConfig::for_windows(self.model.h, n_weather, self.model.f);
        c.hidden = self.model.hidden.clone();
        c.seed = self.seed;
        c.train = self.model.train.clone();
        c.night_filter = self.model.night_filter;
        c.validate().map_err(|e| PipelineError::Config(format!("model: {e}")))?;
        Ok(c)
    }

    /// Split instant: configured, or one year after the synthetic start.
    pub fn split_date(&self) -> DateTime<Utc> {
        self.model.split_date.unwrap_or_else(|| {
            let s = self.synth.start;
            Utc.from_utc_datetime(&s.naive_utc()) + chrono::Duration::days(365)
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        seed = 7
        [site]
        latitude = 39.74
        longitude = -105.18
        peak_power_w = 2400.0
    "#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = PipelineConfig::from_toml(MINIMAL, Path::new("/tmp")).unwrap();
        assert_eq!(c.model.h, 24);
        assert_eq!(c.ingest.issue_hour_utc, 6);
        assert_eq!(c.eval.fit_leads, [6, 20]);
        assert_eq!(c.weather_columns().len(), 2);
        let m = c.mlp_config(2).unwrap();
        assert_eq!(m.input_dim, 24 + 2 * 24 + 24);
        assert_eq!(m.seed, 7);
    }

    #[test]
    fn rejects_bad_values() {
        let with = |extra: &str| PipelineConfig::from_toml(&format!("{MINIMAL}\n{extra}"), Path::new("."));
        assert!(with("[ingest]\noutlier_factor = 0.5").is_err());
        assert!(with("[ingest]\nissue_hour_utc = 24").is_err());
        assert!(with("[model]\nensemble_size = 0").is_err());
        assert!(with("[eval]\nfit_leads = [10, 30]").is_err());
        assert!(with("[model]\nbogus = 1").is_err());
        assert!(PipelineConfig::from_toml("seed = 1", Path::new(".")).is_err());
        let bad_site = MINIMAL.replace("39.74", "99.0");
        assert!(PipelineConfig::from_toml(&bad_site, Path::new(".")).is_err());
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let c = PipelineConfig::from_toml(MINIMAL, Path::new("/data/run")).unwrap();
        assert_eq!(c.resolve(Path::new("p.csv")), PathBuf::from("/data/run/p.csv"));
        assert_eq!(c.resolve(Path::new("/abs.csv")), PathBuf::from("/abs.csv"));
    }
}
