use chrono::{DateTime, Duration, Timelike, Utc};
use serde::{Deserialize, Serialize};

use super::series::HourlySeries;
use super::IngestError;

/// Lag history, horizon and daily issue hour of forecast windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    /// Number of lagged power values `h` (times t-h+1 ..= t).
    pub history: usize,
    /// Number of forecast leads `f` (times t+1 ..= t+f).
    pub horizon: usize,
    pub issue_hour_utc: u32,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            history: 24,
            horizon: 24,
            issue_hour_utc: 6,
        }
    }
}

/// One model input/output record issued at `issue_time`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    pub issue_time: DateTime<Utc>,
    /// Normalized power at t-h+1 ..= t.
    pub lags: Vec<f64>,
    /// One row per weather feature, each covering t+1 ..= t+f.
    pub weather: Vec<Vec<f64>>,
    /// Solar elevation in degrees at t+1 ..= t+f.
    pub elevation: Vec<f64>,
    /// Normalized power at t+1 ..= t+f; `None` for inference windows.
    pub target: Option<Vec<f64>>,
}

impl SampleWindow {
    pub fn history(&self) -> usize {
        self.lags.len()
    }

    pub fn horizon(&self) -> usize {
        self.elevation.len()
    }

    pub fn first_lag_time(&self) -> DateTime<Utc> {
        self.issue_time - Duration::hours(self.history() as i64 - 1)
    }

    pub fn last_target_time(&self) -> DateTime<Utc> {
        self.issue_time + Duration::hours(self.horizon() as i64)
    }

    /// Flat model input: lags, then each weather row, then elevation.
    pub fn features(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.history() + (self.weather.len() + 1) * self.horizon());
        x.extend_from_slice(&self.lags);
        for row in &self.weather {
            x.extend_from_slice(row);
        }
        x.extend_from_slice(&self.elevation);
        x
    }
}

fn check_grids(power: &HourlySeries, weather: &[HourlySeries], elevation: &HourlySeries) -> Result<(), IngestError> {
    for (name, s) in weather
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("weather[{i}]"), s))
        .chain(std::iter::once(("elevation".to_string(), elevation)))
    {
        if !s.same_grid(power) {
            return Err(IngestError::Alignment(format!(
                "{name} covers {} + {}h, power covers {} + {}h",
                s.start(),
                s.len(),
                power.start(),
                power.len()
            )));
        }
    }
    Ok(())
}

fn slice(series: &HourlySeries, from: usize, len: usize) -> Option<Vec<f64>> {
    (from..from + len).map(|i| series.get(i)).collect()
}

fn windows(
    power: &HourlySeries,
    weather: &[HourlySeries],
    elevation: &HourlySeries,
    spec: WindowSpec,
    require_target: bool,
) -> Result<Vec<SampleWindow>, IngestError> {
    if spec.history == 0 || spec.horizon == 0 {
        return Err(IngestError::InvalidArgument("history and horizon must be at least 1".into()));
    }
    check_grids(power, weather, elevation)?;
    let (h, f) = (spec.history, spec.horizon);
    let mut out = Vec::new();
    if power.len() < h + f {
        return Ok(out);
    }
    for t in (h - 1)..(power.len() - f) {
        let issue_time = power.time_at(t);
        if issue_time.hour() != spec.issue_hour_utc {
            continue;
        }
        let Some(lags) = slice(power, t + 1 - h, h) else { continue };
        let Some(weather) = weather.iter().map(|w| slice(w, t + 1, f)).collect::<Option<Vec<_>>>() else {
            continue;
        };
        let Some(elevation) = slice(elevation, t + 1, f) else { continue };
        let target = slice(power, t + 1, f);
        if require_target && target.is_none() {
            continue;
        }
        out.push(SampleWindow {
            issue_time,
            lags,
            weather,
            elevation,
            target: if require_target { target } else { None },
        });
    }
    Ok(out)
}

/// Training/evaluation windows: every window at the issue hour whose lags,
/// weather, elevation and targets are all valid.
pub fn build_samples(
    power: &HourlySeries,
    weather: &[HourlySeries],
    elevation: &HourlySeries,
    spec: WindowSpec,
) -> Result<Vec<SampleWindow>, IngestError> {
    windows(power, weather, elevation, spec, true)
}

/// Like [`build_samples`] but without requiring observed targets.
pub fn build_inference_windows(
    power: &HourlySeries,
    weather: &[HourlySeries],
    elevation: &HourlySeries,
    spec: WindowSpec,
) -> Result<Vec<SampleWindow>, IngestError> {
    windows(power, weather, elevation, spec, false)
}

/// Chronological split. Windows straddling `boundary` go to neither side.
pub fn split_by_date(
    samples: Vec<SampleWindow>,
    boundary: DateTime<Utc>,
) -> (Vec<SampleWindow>, Vec<SampleWindow>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for s in samples {
        if s.last_target_time() < boundary {
            train.push(s);
        } else if s.first_lag_time() >= boundary {
            test.push(s);
        }
    }
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Unit;
    use chrono::TimeZone;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap()
    }

    fn ramp(len: usize, offset: f64, unit: Unit) -> HourlySeries {
        HourlySeries::from_values(t0(), (0..len).map(|i| offset + i as f64).collect(), unit).unwrap()
    }

    fn spec() -> WindowSpec {
        WindowSpec::default()
    }

    #[test]
    fn short_series_gives_nothing() {
        let p = ramp(47, 0.0, Unit::PeakFraction);
        let w = ramp(47, 1000.0, Unit::WattPerM2);
        let e = ramp(47, 0.0, Unit::Degrees);
        assert!(build_samples(&p, &[w], &e, spec()).unwrap().is_empty());
    }

    #[test]
    fn misaligned_grids_rejected() {
        let p = ramp(96, 0.0, Unit::PeakFraction);
        let w = ramp(95, 0.0, Unit::WattPerM2);
        let e = ramp(96, 0.0, Unit::Degrees);
        assert!(matches!(build_samples(&p, &[w], &e, spec()), Err(IngestError::Alignment(_))));
    }

    #[test]
    fn window_time_bounds() {
        let p = ramp(96, 0.0, Unit::PeakFraction);
        let e = ramp(96, 0.0, Unit::Degrees);
        let s = build_samples(&p, &[], &e, spec()).unwrap();
        let first = &s[0];
        assert_eq!(first.issue_time, t0() + Duration::hours(30));
        assert_eq!(first.first_lag_time(), t0() + Duration::hours(7));
        assert_eq!(first.last_target_time(), t0() + Duration::hours(54));
    }

    #[test]
    fn straddling_window_discarded() {
        let p = ramp(24 * 6, 0.0, Unit::PeakFraction);
        let e = ramp(24 * 6, 0.0, Unit::Degrees);
        let s = build_samples(&p, &[], &e, spec()).unwrap();
        let n = s.len();
        // issue times at hours 30, 54, 78, 102; the middle two straddle hour 72
        let boundary = t0() + Duration::hours(24 * 3);
        let (train, test) = split_by_date(s, boundary);
        assert!(train.iter().all(|w| w.last_target_time() < boundary));
        assert!(test.iter().all(|w| w.first_lag_time() >= boundary));
        assert_eq!((train.len(), test.len(), n), (1, 1, 4));
        let (a, b) = split_by_date(Vec::new(), boundary);
        assert!(a.is_empty() && b.is_empty());
    }

    #[test]
    fn inference_windows_skip_targets() {
        let mut vals: Vec<f64> = (0..96).map(|i| i as f64).collect();
        vals[60] = f64::NAN;
        let p = HourlySeries::from_values(t0(), vals, Unit::PeakFraction).unwrap();
        let e = ramp(96, 0.0, Unit::Degrees);
        // the day-2 window has an invalid target at lead 6
        assert_eq!(build_samples(&p, &[], &e, spec()).unwrap().len(), 1);
        let inf = build_inference_windows(&p, &[], &e, spec()).unwrap();
        assert_eq!(inf.len(), 2);
        assert!(inf.iter().all(|w| w.target.is_none()));
    }
}
