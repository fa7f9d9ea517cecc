use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, Timelike, Utc};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::manifest::{write_manifest, OutputLock};
use super::render::{EvalSummary, LeadRow, ModeSummary, SUMMARY_VERSION};
use super::runs::{read_runs_csv, write_runs_csv};
use super::synth::generate;
use super::{require, write_file, write_json, PipelineConfig, PipelineError, WeatherColumn};
use crate::distfit::qq_points;
use crate::erroranalysis::{
    decomposition_report, lead_errors, lead_report, temporal_autocorrelation, ForecastRun, LeadReportOptions,
};
use crate::features::{feature_report, lag_autocorrelation, write_report_csv, FeatureExtractor};
use crate::ingest::{
    build_inference_windows, build_samples, clean_power, normalize_by_peak, parse_csv, resample_hourly_mean,
    split_by_date, union_grid, CsvSchema, HourlySeries, SampleWindow, Unit,
};
use crate::plantmodel::{
    default_search_space, ensemble_train, grid_search, load_ensemble, save_ensemble, windows_to_xy, write_grid_csv,
    MlpConfig,
};
use crate::solarpos::elevation_series;

/// Forecast runs are stored in W/kWp.
const W_PER_KWP: f64 = 1000.0;
const MAX_POWER_LAG: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ForecastMode {
    /// Observed weather as the forecast: plant-model error only.
    Perfect,
    /// Forecast weather: plant-model plus weather-forecast error.
    Nwp,
}

impl ForecastMode {
    pub fn name(self) -> &'static str {
        match self {
            ForecastMode::Perfect => "perfect",
            ForecastMode::Nwp => "nwp",
        }
    }
}

/// A validated configuration bound to an output directory.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub config: PipelineConfig,
    pub out: PathBuf,
}

struct Inputs {
    power: PathBuf,
    observations: PathBuf,
    forecasts: PathBuf,
    timestamp: String,
    power_column: String,
    weather: Vec<WeatherColumn>,
}

struct Loaded {
    power: HourlySeries,
    weather: Vec<HourlySeries>,
    elevation: HourlySeries,
}

fn file_stem(column: &str) -> String {
    column
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

impl Workspace {
    pub fn new(config: PipelineConfig, out: impl Into<PathBuf>) -> Self {
        Self {
            config,
            out: out.into(),
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    /// Runs `f` holding the output lock, then refreshes the manifest.
    pub fn run_locked<T>(&self, f: impl FnOnce(&Self) -> Result<T, PipelineError>) -> Result<T, PipelineError> {
        let _lock = OutputLock::acquire(&self.out)?;
        let v = f(self)?;
        write_manifest(&self.out)?;
        Ok(v)
    }

    fn inputs(&self) -> Inputs {
        match &self.config.data {
            Some(d) => Inputs {
                power: self.config.resolve(&d.power),
                observations: self.config.resolve(&d.observations),
                forecasts: self.config.resolve(&d.forecasts),
                timestamp: d.timestamp_column.clone(),
                power_column: d.power_column.clone(),
                weather: d.weather.clone(),
            },
            None => Inputs {
                power: self.path("synth/power.csv"),
                observations: self.path("synth/weather_obs.csv"),
                forecasts: self.path("synth/weather_fcst.csv"),
                timestamp: "timestamp".into(),
                power_column: "power_w".into(),
                weather: self.config.weather_columns(),
            },
        }
    }

    fn canonical(&self, name: &str) -> PathBuf {
        self.path(&format!("ingest/{name}.csv"))
    }

    fn read_canonical(&self, name: &str, unit: Unit) -> Result<HourlySeries, PipelineError> {
        let path = require(self.canonical(name), "pvforecast ingest")?;
        let file = std::fs::File::open(&path).map_err(|e| PipelineError::io(&path, e))?;
        Ok(HourlySeries::read_canonical(std::io::BufReader::new(file), unit, &path.display().to_string())?)
    }

    fn load(&self, mode: ForecastMode) -> Result<Loaded, PipelineError> {
        let prefix = match mode {
            ForecastMode::Perfect => "obs",
            ForecastMode::Nwp => "fcst",
        };
        let weather = self
            .config
            .weather_columns()
            .iter()
            .map(|c| self.read_canonical(&format!("{prefix}_{}", file_stem(&c.column)), c.unit))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Loaded {
            power: self.read_canonical("power", Unit::PeakFraction)?,
            weather,
            elevation: self.read_canonical("elevation", Unit::Degrees)?,
        })
    }

    /// Complete windows built from the canonical series and observed weather.
    pub fn samples(&self) -> Result<Vec<SampleWindow>, PipelineError> {
        let d = self.load(ForecastMode::Perfect)?;
        Ok(build_samples(&d.power, &d.weather, &d.elevation, self.config.window_spec())?)
    }
}

pub fn cmd_synth(ws: &Workspace) -> Result<String, PipelineError> {
    let site = ws.config.site.meta()?;
    let data = generate(&ws.config.synth, &site, ws.config.seed)?;
    write_file(&ws.path("synth/power.csv"), |w| data.write_power_csv(w))?;
    write_file(&ws.path("synth/weather_obs.csv"), |w| data.observations.write_csv(w))?;
    write_file(&ws.path("synth/weather_fcst.csv"), |w| data.forecasts.write_csv(w))?;
    Ok(format!(
        "synthetic scenario: {} days from {}, {} power readings, seed {}\n",
        ws.config.synth.days,
        ws.config.synth.start,
        data.power.len(),
        ws.config.seed
    ))
}

#[derive(Debug, Clone, Serialize)]
struct Coverage {
    name: String,
    source: String,
    raw_rows: usize,
    rejected_rows: usize,
    /// Valid raw readings invalidated as outliers.
    cleaned_out: usize,
    valid_fraction: f64,
    /// Valid fraction of hourly slots per meteorological season (by month).
    seasons: BTreeMap<&'static str, f64>,
}

fn season(t: DateTime<Utc>) -> &'static str {
    match t.month() {
        12 | 1 | 2 => "djf",
        3..=5 => "mam",
        6..=8 => "jja",
        _ => "son",
    }
}

fn coverage(name: &str, source: &Path, raw: usize, rejected: usize, cleaned: usize, s: &HourlySeries) -> Coverage {
    let mut per: BTreeMap<&'static str, (usize, usize)> = BTreeMap::new();
    for i in 0..s.len() {
        let e = per.entry(season(s.time_at(i))).or_default();
        e.1 += 1;
        if s.valid()[i] {
            e.0 += 1;
        }
    }
    Coverage {
        name: name.into(),
        source: source.display().to_string(),
        raw_rows: raw,
        rejected_rows: rejected,
        cleaned_out: cleaned,
        valid_fraction: s.valid_fraction(),
        seasons: per.into_iter().map(|(k, (v, n))| (k, v as f64 / n as f64)).collect(),
    }
}

/// Cleans, resamples and aligns the three inputs onto one hourly grid and
/// writes them as canonical CSVs with the solar elevation. Low coverage is
/// reported, not rejected.
pub fn cmd_ingest(ws: &Workspace) -> Result<String, PipelineError> {
    let cfg = &ws.config;
    let site = cfg.site.meta()?;
    let inp = ws.inputs();

    let parsed = parse_csv(&inp.power, &CsvSchema::new(&inp.timestamp, &inp.power_column))?;
    let cleaned = clean_power(&parsed.records, site.peak_power, cfg.ingest.outlier_factor);
    let cleaned_out = parsed.records.iter().zip(&cleaned).filter(|(a, b)| a.valid && !b.valid).count();
    let power_w = resample_hourly_mean(&cleaned, Unit::Watt);
    let power = normalize_by_peak(&power_w, site.peak_power)?;
    let mut series = vec![("power".to_string(), inp.power.clone(), parsed.records.len(), parsed.rejected.len(), cleaned_out, power)];

    for (prefix, path) in [("obs", &inp.observations), ("fcst", &inp.forecasts)] {
        for c in &inp.weather {
            let p = parse_csv(path, &CsvSchema::new(&inp.timestamp, &c.column))?;
            let s = resample_hourly_mean(&p.records, c.unit);
            series.push((format!("{prefix}_{}", file_stem(&c.column)), path.clone(), p.records.len(), p.rejected.len(), 0, s));
        }
    }
    let refs: Vec<&HourlySeries> = series.iter().map(|s| &s.5).collect();
    let (start, len) = union_grid(&refs).ok_or_else(|| PipelineError::Data("no readings in any input file".into()))?;
    let elevation = elevation_series(&site, start, len, cfg.ingest.elevation_anchor)
        .map_err(|e| PipelineError::Config(e.to_string()))?;

    let mut report = Vec::new();
    for (name, src, raw, rejected, cleaned, s) in &series {
        let s = s.reindex(start, len)?;
        let path = ws.canonical(name);
        write_file(&path, |w| s.write_canonical(w).map_err(std::io::Error::other))?;
        let src = src.strip_prefix(&ws.out).unwrap_or(src);
        report.push(coverage(name, src, *raw, *rejected, *cleaned, &s));
    }
    write_file(&ws.canonical("elevation"), |w| elevation.write_canonical(w).map_err(std::io::Error::other))?;
    write_json(
        &ws.path("ingest/report.json"),
        &json!({"grid_start": start, "hours": len, "series": report}),
    )?;

    let mut text = format!("hourly grid: {start} + {len} h\n");
    let _ = writeln!(text, "{:<16} {:>8} {:>8} {:>8} {:>7} {:>6} {:>6} {:>6} {:>6}", "series", "rows", "rejected", "outliers", "valid", "djf", "mam", "jja", "son");
    for c in &report {
        let pct = |k: &str| c.seasons.get(k).map_or("-".to_string(), |v| format!("{:.1}%", 100.0 * v));
        let _ = writeln!(
            text,
            "{:<16} {:>8} {:>8} {:>8} {:>6.1}% {:>6} {:>6} {:>6} {:>6}",
            c.name,
            c.raw_rows,
            c.rejected_rows,
            c.cleaned_out,
            100.0 * c.valid_fraction,
            pct("djf"),
            pct("mam"),
            pct("jja"),
            pct("son")
        );
    }
    Ok(text)
}

/// Correlation of each input feature with same-hour power over all training
/// windows, and the autocorrelation of hourly power.
pub fn cmd_features(ws: &Workspace) -> Result<String, PipelineError> {
    let cols = ws.config.weather_columns();
    let samples = ws.samples()?;
    let mut ex: Vec<FeatureExtractor> = cols
        .iter()
        .enumerate()
        .map(|(i, c)| FeatureExtractor::weather(c.column.clone(), i))
        .collect();
    ex.push(FeatureExtractor::elevation());
    let (h, f) = (ws.config.model.h, ws.config.model.f);
    if h >= 24 && f <= 24 {
        ex.push(FeatureExtractor::new("power_24h_before", move |w, k| w.lags[h - 24 + k]));
    }
    let rep = feature_report(&samples, &ex).map_err(|e| PipelineError::Data(format!("features: {e}")))?;
    write_file(&ws.path("features/correlations.csv"), |w| write_report_csv(&rep, w))?;

    let power = ws.read_canonical("power", Unit::PeakFraction)?;
    let lags = lag_autocorrelation(&power, MAX_POWER_LAG, ws.config.eval.min_pairs);
    write_file(&ws.path("features/lag_autocorrelation.csv"), |w| {
        use std::io::Write;
        writeln!(w, "lag,pearson,pairs")?;
        for c in &lags.correlations {
            writeln!(w, "{},{},{}", c.lag, c.pearson, c.pairs)?;
        }
        Ok(())
    })?;
    for warning in &lags.warnings {
        log::warn!("power autocorrelation: {warning}");
    }

    let mut text = format!("{} windows\n{:<20} {:>8} {:>8} {:>8}\n", samples.len(), "feature", "pearson", "spearman", "n");
    let cell = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.3}"));
    for r in &rep {
        let _ = writeln!(text, "{:<20} {:>8} {:>8} {:>8}", r.feature, cell(r.pearson), cell(r.spearman), r.sample_count);
    }
    if let (Some(a), Some(b)) = (lags.at(1), lags.at(24)) {
        let _ = writeln!(text, "power autocorrelation: lag 1 {a:.3}, lag 24 {b:.3}");
    }
    Ok(text)
}

/// Trains the ensemble on windows before the split date, optionally after a
/// cross-validated grid search over hidden layouts.
pub fn cmd_train(ws: &Workspace) -> Result<String, PipelineError> {
    let cfg = &ws.config;
    let samples = ws.samples()?;
    let split = cfg.split_date();
    let (train, test) = split_by_date(samples, split);
    if train.is_empty() {
        return Err(PipelineError::Data(format!("no complete training windows before {split}")));
    }
    let mut text = format!("{} training windows before {split}, {} after\n", train.len(), test.len());
    let mut config = cfg.mlp_config(cfg.weather_columns().len())?;

    if cfg.model.grid.enabled {
        let space: Vec<MlpConfig> = if cfg.model.grid.hidden.is_empty() {
            default_search_space(&config)
        } else {
            cfg.model
                .grid
                .hidden
                .iter()
                .map(|h| MlpConfig {
                    hidden: h.clone(),
                    ..config.clone()
                })
                .collect()
        };
        let (x, y) = windows_to_xy(&train)?;
        let cells = grid_search(&space, &x, &y, cfg.model.grid.folds);
        write_file(&ws.path("model/grid.csv"), |w| write_grid_csv(&cells, w))?;
        let best = cells
            .first()
            .filter(|c| c.result.is_ok())
            .ok_or_else(|| PipelineError::Model("every grid-search configuration failed".into()))?;
        let _ = writeln!(
            text,
            "grid search: best hidden layout {} (mean R² {:.4}) of {}",
            best.config.hidden_label(),
            best.mean_r2().unwrap_or(f64::NAN),
            cells.len()
        );
        config = best.config.clone();
    }

    let (ens, log) = ensemble_train(&config, cfg.model.ensemble_size, &train)?;
    let model_path = ws.path("model/ensemble.json");
    super::create_parent(&model_path)?;
    save_ensemble(&ens, &model_path)?;
    write_json(&ws.path("model/training_log.json"), &log)?;
    let retried = log.members.iter().filter(|m| m.attempts > 1).count();
    let _ = writeln!(
        text,
        "trained {} members, hidden {}, {} needed retries",
        ens.size(),
        config.hidden_label(),
        retried
    );
    Ok(text)
}

fn slot_values(s: &HourlySeries, from: usize, len: usize) -> (Vec<f64>, Vec<bool>) {
    (from..from + len)
        .map(|i| match s.get(i) {
            Some(v) => (v, true),
            None => (f64::NAN, false),
        })
        .unzip()
}

/// Runs the trained ensemble over every issue time after the split date.
/// The two modes differ only in which weather files feed the windows.
pub fn cmd_forecast(ws: &Workspace, mode: ForecastMode) -> Result<String, PipelineError> {
    let cfg = &ws.config;
    let model = load_ensemble(&require(ws.path("model/ensemble.json"), "pvforecast train")?)?;
    let spec = cfg.window_spec();
    let d = ws.load(mode)?;
    let split = cfg.split_date();
    let windows = build_inference_windows(&d.power, &d.weather, &d.elevation, spec)?;
    let (_, test) = split_by_date(windows, split);

    let (h, f) = (spec.history, spec.horizon);
    let p = &d.power;
    let candidates: Vec<usize> = (h - 1..p.len().saturating_sub(f))
        .filter(|&t| p.time_at(t).hour() == spec.issue_hour_utc && p.time_at(t + 1 - h) >= split)
        .collect();
    let produced: std::collections::HashSet<DateTime<Utc>> = test.iter().map(|w| w.issue_time).collect();
    let skipped: Vec<DateTime<Utc>> =
        candidates.iter().map(|&t| p.time_at(t)).filter(|t| !produced.contains(t)).collect();
    for t in &skipped {
        log::debug!("{}: no window issued at {t} (invalid lags or weather)", mode.name());
    }
    if !skipped.is_empty() {
        log::warn!("{}: skipped {} of {} issue times", mode.name(), skipped.len(), candidates.len());
    }
    if test.is_empty() {
        return Err(PipelineError::Data(format!("no forecast windows after {split}")));
    }

    let runs = test
        .par_iter()
        .map(|w| {
            let pred = model.predict_window(w)?;
            let t = p.index_of(w.issue_time).expect("window on grid");
            let (truth, valid) = slot_values(p, t + 1, f);
            Ok(ForecastRun::new(w.issue_time, pred, truth, valid)?.scaled(W_PER_KWP))
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let path = ws.path(&format!("forecast/runs_{}.csv", mode.name()));
    write_file(&path, |w| write_runs_csv(&runs, w))?;

    if mode == ForecastMode::Nwp {
        let cols = cfg.weather_columns();
        let k = cols.iter().position(|c| c.column == "ghi").unwrap_or(0);
        let obs = ws.read_canonical(&format!("obs_{}", file_stem(&cols[k].column)), cols[k].unit)?;
        let weather_runs = test
            .iter()
            .map(|w| {
                let t = p.index_of(w.issue_time).expect("window on grid");
                let (truth, valid) = slot_values(&obs, t + 1, f);
                ForecastRun::new(w.issue_time, w.weather[k].clone(), truth, valid)
            })
            .collect::<Result<Vec<_>, _>>()?;
        write_file(&ws.path("forecast/runs_weather.csv"), |w| write_runs_csv(&weather_runs, w))?;
    }
    Ok(format!(
        "{} mode: {} runs written to {}, {} issue times skipped\n",
        mode.name(),
        runs.len(),
        path.display(),
        skipped.len()
    ))
}

fn read_runs(path: &Path) -> Result<Option<Vec<ForecastRun>>, PipelineError> {
    if !path.exists() {
        return Ok(None);
    }
    let file = std::fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    read_runs_csv(std::io::BufReader::new(file), &path.display().to_string()).map(Some)
}

fn fits_json(reports: &[crate::erroranalysis::LeadReport]) -> Value {
    Value::Array(
        reports
            .iter()
            .map(|r| {
                let fits: Vec<Value> = r
                    .fits
                    .iter()
                    .map(|f| match &f.outcome {
                        Ok(d) => d.to_json(),
                        Err(e) => json!({"family": f.family, "error": e}),
                    })
                    .collect();
                json!({"lead": r.lead, "n": r.n, "moments": r.moments, "fits": fits})
            })
            .collect(),
    )
}

/// Error decomposition, per-lead distribution fits and error
/// autocorrelation for every forecast mode that has runs.
pub fn cmd_eval(ws: &Workspace) -> Result<String, PipelineError> {
    let cfg = &ws.config.eval;
    let mut modes = BTreeMap::new();
    for mode in [ForecastMode::Perfect, ForecastMode::Nwp] {
        if let Some(r) = read_runs(&ws.path(&format!("forecast/runs_{}.csv", mode.name())))? {
            modes.insert(mode, r);
        }
    }
    if modes.is_empty() {
        return Err(PipelineError::Data("no forecast runs found; run `pvforecast forecast` first".into()));
    }
    let weather = read_runs(&ws.path("forecast/runs_weather.csv"))?;
    let decomposition = decomposition_report(
        modes.get(&ForecastMode::Perfect).map(Vec::as_slice),
        weather.as_deref(),
        modes.get(&ForecastMode::Nwp).map(Vec::as_slice),
    )?;

    let opts = LeadReportOptions {
        fit_leads: cfg.fit_leads[0]..=cfg.fit_leads[1],
        min_fit_samples: cfg.min_fit_samples,
    };
    let mut summaries = BTreeMap::new();
    for (mode, runs) in &modes {
        let name = mode.name();
        let samples = lead_errors(runs)?;
        write_file(&ws.path(&format!("eval/lead_errors_{name}.csv")), |w| samples.write_csv(w))?;
        let reports = lead_report(&samples, &opts);
        write_json(&ws.path(&format!("eval/lead_fits_{name}.json")), &fits_json(&reports))?;

        let ac = temporal_autocorrelation(&samples, cfg.max_distance, cfg.min_pairs);
        for w in &ac.warnings {
            log::warn!("{name} error autocorrelation: {w}");
        }
        write_file(&ws.path(&format!("eval/autocorrelation_{name}.csv")), |w| {
            use std::io::Write;
            writeln!(w, "distance,pearson,pairs")?;
            for d in &ac.pooled {
                writeln!(w, "{},{},{}", d.distance, d.pearson, d.pairs)?;
            }
            Ok(())
        })?;
        write_file(&ws.path(&format!("eval/autocorrelation_pairs_{name}.csv")), |w| {
            use std::io::Write;
            writeln!(w, "lead_a,lead_b,pearson,pairs")?;
            for p in &ac.per_pair {
                let r = p.pearson.map_or(String::new(), |v| v.to_string());
                writeln!(w, "{},{},{r},{}", p.lead_a, p.lead_b, p.pairs)?;
            }
            Ok(())
        })?;

        if cfg.qq {
            let jobs: Vec<(usize, &crate::distfit::FittedDistribution)> = reports
                .iter()
                .flat_map(|r| r.fits.iter().filter_map(move |f| f.outcome.as_ref().ok().map(|d| (r.lead, d))))
                .filter(|(_, d)| d.converged)
                .collect();
            let points = jobs
                .par_iter()
                .map(|(lead, d)| qq_points(&samples.lead(lead - 1), &d.family).map_err(|e| (*lead, d.family.name(), e)))
                .collect::<Vec<_>>();
            for ((lead, d), pts) in jobs.iter().zip(points) {
                match pts {
                    Ok(pts) => {
                        let path = ws.path(&format!("eval/qq/{name}_lead{lead:02}_{}.csv", d.family.name()));
                        write_file(&path, |w| {
                            use std::io::Write;
                            writeln!(w, "theoretical,empirical")?;
                            for (a, b) in &pts {
                                writeln!(w, "{a},{b}")?;
                            }
                            Ok(())
                        })?;
                    }
                    Err((lead, fam, e)) => log::warn!("{name} lead {lead} {fam}: no Q–Q points: {e}"),
                }
            }
        }

        summaries.insert(
            name.to_string(),
            ModeSummary {
                runs: runs.len(),
                leads: reports.iter().map(LeadRow::from_report).collect(),
                autocorrelation: ac.pooled,
            },
        );
    }
    let summary = EvalSummary {
        version: SUMMARY_VERSION,
        decomposition,
        modes: summaries,
    };
    write_json(&ws.path("eval/summary.json"), &summary)?;
    Ok(summary.render())
}

/// Re-renders the tables from `eval/summary.json` into `report.txt`.
pub fn cmd_report(ws: &Workspace) -> Result<String, PipelineError> {
    let path = require(ws.path("eval/summary.json"), "pvforecast eval")?;
    let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
    let summary: EvalSummary = serde_json::from_str(&text).map_err(|e| PipelineError::io(&path, e))?;
    if summary.version != SUMMARY_VERSION {
        return Err(PipelineError::Data(format!(
            "{}: summary version {} (expected {SUMMARY_VERSION})",
            path.display(),
            summary.version
        )));
    }
    let rendered = summary.render();
    write_file(&ws.path("report.txt"), |w| std::io::Write::write_all(w, rendered.as_bytes()))?;
    Ok(rendered)
}
