//! Pearson/Spearman correlation analysis used to choose model inputs.

use serde::Serialize;
use thiserror::Error;

use crate::ingest::{HourlySeries, SampleWindow};

#[derive(Debug, Error, PartialEq)]
pub enum CorrelationError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("correlation undefined for a constant input")]
    Undefined,
}

/// Sample Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, CorrelationError> {
    if x.len() != y.len() {
        return Err(CorrelationError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(CorrelationError::TooFewPairs(n));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CorrelationError::Undefined);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the average of their positions.
pub fn midranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of mid-ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, CorrelationError> {
    if x.len() != y.len() {
        return Err(CorrelationError::LengthMismatch(x.len(), y.len()));
    }
    pearson(&midranks(x), &midranks(y))
}

/// Default minimum number of jointly valid pairs per lag.
pub const MIN_LAG_PAIRS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagCorrelation {
    pub lag: usize,
    pub pearson: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LagReport {
    pub correlations: Vec<LagCorrelation>,
    /// One entry per omitted lag.
    pub warnings: Vec<String>,
}

impl LagReport {
    pub fn at(&self, lag: usize) -> Option<f64> {
        self.correlations.iter().find(|c| c.lag == lag).map(|c| c.pearson)
    }
}

/// Correlation of `(v[t], v[t - lag])` over jointly valid slots.
pub fn lag_correlation(series: &HourlySeries, lag: usize) -> Result<LagCorrelation, CorrelationError> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for t in lag..series.len() {
        if let (Some(a), Some(b)) = (series.get(t), series.get(t - lag)) {
            x.push(a);
            y.push(b);
        }
    }
    let pairs = x.len();
    pearson(&x, &y).map(|pearson| LagCorrelation { lag, pearson, pairs })
}

/// Autocorrelation at lags `1..=max_lag`, computed on all hours (night
/// included). Lags with fewer than `min_pairs` valid pairs are omitted.
pub fn lag_autocorrelation(series: &HourlySeries, max_lag: usize, min_pairs: usize) -> LagReport {
    let mut report = LagReport::default();
    for lag in 1..=max_lag {
        match lag_correlation(series, lag) {
            Ok(c) if c.pairs >= min_pairs => report.correlations.push(c),
            Ok(c) => report
                .warnings
                .push(format!("lag {lag}: only {} valid pairs (need {min_pairs})", c.pairs)),
            Err(e) => report.warnings.push(format!("lag {lag}: {e}")),
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub feature: String,
    /// `None` when the correlation is undefined (constant input).
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub sample_count: usize,
}

/// Named accessor for one scalar input per `(window, lead)`.
pub struct FeatureExtractor {
    pub name: String,
    extract: Box<dyn Fn(&SampleWindow, usize) -> f64 + Send + Sync>,
}

impl FeatureExtractor {
    pub fn new(name: impl Into<String>, extract: impl Fn(&SampleWindow, usize) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            extract: Box::new(extract),
        }
    }

    /// Row `index` of the window's weather block.
    pub fn weather(name: impl Into<String>, index: usize) -> Self {
        Self::new(name, move |w, lead| w.weather[index][lead])
    }

    pub fn elevation() -> Self {
        Self::new("elevation", |w, lead| w.elevation[lead])
    }

    pub fn value(&self, window: &SampleWindow, lead: usize) -> f64 {
        (self.extract)(window, lead)
    }
}

/// Per-feature correlation with same-hour target power, pooled over every
/// window and lead.
pub fn feature_report(
    samples: &[SampleWindow],
    extractors: &[FeatureExtractor],
) -> Result<Vec<CorrelationReport>, CorrelationError> {
    if samples.is_empty() {
        return Err(CorrelationError::TooFewPairs(0));
    }
    let mut power = Vec::new();
    let mut cells = Vec::new();
    for (wi, w) in samples.iter().enumerate() {
        if let Some(target) = &w.target {
            for (lead, &p) in target.iter().enumerate() {
                power.push(p);
                cells.push((wi, lead));
            }
        }
    }
    extractors
        .iter()
        .map(|ex| {
            let x: Vec<f64> = cells.iter().map(|&(wi, lead)| ex.value(&samples[wi], lead)).collect();
            let defined = |r: Result<f64, CorrelationError>| match r {
                Ok(v) => Ok(Some(v)),
                Err(CorrelationError::Undefined) => Ok(None),
                Err(e) => Err(e),
            };
            Ok(CorrelationReport {
                feature: ex.name.clone(),
                pearson: defined(pearson(&x, &power))?,
                spearman: defined(spearman(&x, &power))?,
                sample_count: x.len(),
            })
        })
        .collect()
}

/// `feature,pearson,spearman,n`; undefined coefficients are written as `-`.
pub fn write_report_csv<W: std::io::Write>(
    reports: &[CorrelationReport],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "feature,pearson,spearman,n")?;
    let cell = |v: Option<f64>| v.map_or("-".to_string(), |v| v.to_string());
    for r in reports {
        writeln!(out, "{},{},{},{}", r.feature, cell(r.pearson), cell(r.spearman), r.sample_count)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Unit;
    use approx::assert_abs_diff_eq;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_linear() {
        assert_abs_diff_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn hand_computed_pearson() {
        // Sxy = 5.5, Sxx = 5, Syy = 8.75
        let want = 5.5 / (5.0f64 * 8.75).sqrt();
        assert_abs_diff_eq!(pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 5.0]).unwrap(), want, epsilon = 1e-15);
        assert_abs_diff_eq!(want, 0.831_521_84, epsilon = 1e-8);
    }

    #[test]
    fn constant_input_is_undefined() {
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(CorrelationError::Undefined));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]), Err(CorrelationError::Undefined));
        assert_eq!(pearson(&[1.0], &[1.0]), Err(CorrelationError::TooFewPairs(1)));
    }

    #[test]
    fn spearman_ignores_monotone_transforms() {
        assert_abs_diff_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 4.0, 9.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spearman(&[0.1, 0.5, 7.0, 8.0], &[-3.0, 0.0, 1.0, 100.0]).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn spearman_with_ties() {
        // mid-ranks: x -> 1, 2.5, 2.5, 4 ; y -> 1, 2, 3, 4
        // mean 2.5; dx = -1.5, 0, 0, 1.5; dy = -1.5, -0.5, 0.5, 1.5
        // Sxy = 4.5, Sxx = 4.5, Syy = 5
        let want = 4.5 / (4.5f64 * 5.0).sqrt();
        assert_eq!(midranks(&[1.0, 2.0, 2.0, 3.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_abs_diff_eq!(spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap(), want, epsilon = 1e-15);
    }

    fn hourly(values: Vec<f64>) -> HourlySeries {
        HourlySeries::from_values(Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap(), values, Unit::Celsius).unwrap()
    }

    #[test]
    fn periodic_series_lag_24() {
        let s = hourly((0..24 * 20).map(|i| ((i % 24) as f64 * 0.3).sin()).collect());
        let r = lag_autocorrelation(&s, 24, MIN_LAG_PAIRS);
        assert_abs_diff_eq!(r.at(24).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lag_correlation(&s, 0).unwrap().pearson, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn white_noise_has_no_memory() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = hourly((0..10_000).map(|_| rng.random::<f64>() - 0.5).collect());
        let r = lag_autocorrelation(&s, 48, MIN_LAG_PAIRS);
        assert_eq!(r.correlations.len(), 48);
        assert!(r.correlations.iter().all(|c| c.pearson.abs() < 0.05));
    }

    #[test]
    fn short_lags_omitted_with_warning() {
        let s = hourly((0..40).map(|i| i as f64).collect());
        let r = lag_autocorrelation(&s, 12, MIN_LAG_PAIRS);
        assert_eq!(r.correlations.len(), 10);
        assert_eq!(r.warnings.len(), 2);
    }

    fn window(ghi: Vec<f64>, temp: Vec<f64>, target: Vec<f64>) -> SampleWindow {
        SampleWindow {
            issue_time: Utc.with_ymd_and_hms(2022, 1, 1, 6, 0, 0).unwrap(),
            lags: vec![0.0; 2],
            elevation: vec![10.0; ghi.len()],
            weather: vec![ghi, temp],
            target: Some(target),
        }
    }

    #[test]
    fn report_matches_direct_calls() {
        let samples = vec![
            window(vec![100.0, 300.0], vec![5.0, 9.0], vec![0.1, 0.35]),
            window(vec![200.0, 50.0], vec![7.0, 3.0], vec![0.2, 0.04]),
        ];
        let extractors = [
            FeatureExtractor::weather("ghi", 0),
            FeatureExtractor::weather("temp", 1),
            FeatureExtractor::elevation(),
            FeatureExtractor::new("target", |w, l| w.target.as_ref().unwrap()[l]),
        ];
        let rep = feature_report(&samples, &extractors).unwrap();
        let power = [0.1, 0.35, 0.2, 0.04];
        assert_eq!(rep[0].pearson, Some(pearson(&[100.0, 300.0, 200.0, 50.0], &power).unwrap()));
        assert_eq!(rep[1].spearman, Some(spearman(&[5.0, 9.0, 7.0, 3.0], &power).unwrap()));
        assert_eq!(rep[2].pearson, None);
        assert_abs_diff_eq!(rep[3].pearson.unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(rep[0].sample_count, 4);
        let mut csv = Vec::new();
        write_report_csv(&rep, &mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().contains("elevation,-,-,4"));
    }

    proptest! {
        #[test]
        fn symmetric_bounded_and_affine_invariant(
            pts in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..40),
            scale in 0.01f64..100.0,
            shift in -100.0f64..100.0,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            if let (Ok(r), Ok(s)) = (pearson(&x, &y), spearman(&x, &y)) {
                prop_assert!(r.abs() <= 1.0 && s.abs() <= 1.0);
                prop_assert!((r - pearson(&y, &x).unwrap()).abs() < 1e-12);
                prop_assert!((s - spearman(&y, &x).unwrap()).abs() < 1e-12);
                let xs: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
                prop_assert!((r - pearson(&xs, &y).unwrap()).abs() < 1e-9);
                let xc: Vec<f64> = x.iter().map(|v| v * v * v).collect();
                prop_assert!((s - spearman(&xc, &y).unwrap()).abs() < 1e-12);
                prop_assert_eq!(s, pearson(&midranks(&x), &midranks(&y)).unwrap());
            }
        }
    }
}
