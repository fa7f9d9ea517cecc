use serde::{Deserialize, Serialize};

use super::{check_issue_hours, AnalysisError, ForecastRun};

fn double_mean(runs: &[ForecastRun], g: impl Fn(f64) -> f64) -> Result<f64, AnalysisError> {
    let mut total = 0.0;
    let mut counted = 0usize;
    for run in runs {
        let (mut s, mut k) = (0.0, 0usize);
        for e in run.errors().flatten() {
            s += g(e);
            k += 1;
        }
        if k > 0 {
            total += s / k as f64;
            counted += 1;
        }
    }
    if counted == 0 {
        return Err(AnalysisError::NoValidData);
    }
    Ok(total / counted as f64)
}

/// Mean over runs of the mean over valid leads of `p̂ − p̃`. Positive means
/// overprediction. Runs without a valid lead are skipped.
pub fn mbe(runs: &[ForecastRun]) -> Result<f64, AnalysisError> {
    double_mean(runs, |e| e)
}

/// As [`mbe`] with `|p̂ − p̃|`.
pub fn mae(runs: &[ForecastRun]) -> Result<f64, AnalysisError> {
    double_mean(runs, f64::abs)
}

/// Relative change of MAE from `plant` to `combined`, in percent.
pub fn inflation_percent(plant_mae: f64, combined_mae: f64) -> f64 {
    (combined_mae - plant_mae) / plant_mae * 100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub mbe: f64,
    pub mae: f64,
    pub runs: usize,
}

impl ErrorMetrics {
    fn of(runs: &[ForecastRun]) -> Result<Self, AnalysisError> {
        check_issue_hours(runs)?;
        Ok(Self {
            mbe: mbe(runs)?,
            mae: mae(runs)?,
            runs: runs.len(),
        })
    }
}

/// Plant-only, weather-only and combined error columns. Absent inputs give
/// absent columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub plant: Option<ErrorMetrics>,
    pub weather: Option<ErrorMetrics>,
    pub combined: Option<ErrorMetrics>,
    /// Combined MAE relative to plant MAE, in percent.
    pub inflation_pct: Option<f64>,
}

pub fn decomposition_report(
    plant: Option<&[ForecastRun]>,
    weather: Option<&[ForecastRun]>,
    combined: Option<&[ForecastRun]>,
) -> Result<DecompositionReport, AnalysisError> {
    let plant = plant.map(ErrorMetrics::of).transpose()?;
    let weather = weather.map(ErrorMetrics::of).transpose()?;
    let combined = combined.map(ErrorMetrics::of).transpose()?;
    let inflation_pct = match (plant, combined) {
        (Some(p), Some(c)) => Some(inflation_percent(p.mae, c.mae)),
        _ => None,
    };
    Ok(DecompositionReport {
        plant,
        weather,
        combined,
        inflation_pct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use chrono::{TimeZone, Utc};

    fn run(day: u32, pred: &[f64], truth: &[f64]) -> ForecastRun {
        ForecastRun::new(
            Utc.with_ymd_and_hms(2022, 1, day, 6, 0, 0).unwrap(),
            pred.to_vec(),
            truth.to_vec(),
            vec![true; pred.len()],
        )
        .unwrap()
    }

    #[test]
    fn exact_and_offset() {
        let r = vec![run(1, &[1.0, 2.0], &[1.0, 2.0])];
        assert_eq!(mbe(&r).unwrap(), 0.0);
        assert_eq!(mae(&r).unwrap(), 0.0);
        let r = vec![run(1, &[6.0, 7.0], &[1.0, 2.0]), run(2, &[5.0, 5.0], &[0.0, 0.0])];
        assert_eq!(mbe(&r).unwrap(), 5.0);
    }

    #[test]
    fn cancelling_errors() {
        let r = vec![run(1, &[5.0, -5.0], &[0.0, 0.0])];
        assert_eq!(mbe(&r).unwrap(), 0.0);
        assert_eq!(mae(&r).unwrap(), 5.0);
    }

    #[test]
    fn toy_table() {
        // errors: run 1 (1, −2, 4), run 2 (0, 3, valid only on the first two leads)
        let a = run(1, &[1.0, 0.0, 4.0], &[0.0, 2.0, 0.0]);
        let mut b = run(2, &[0.0, 3.0, 9.0], &[0.0, 0.0, 0.0]);
        b.valid[2] = false;
        let r = [a, b];
        assert_abs_diff_eq!(mbe(&r).unwrap(), (1.0 + 1.5) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mae(&r).unwrap(), (7.0 / 3.0 + 1.5) / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn no_valid_data() {
        let mut r = run(1, &[1.0], &[1.0]);
        r.valid[0] = false;
        assert_eq!(mbe(&[r]), Err(AnalysisError::NoValidData));
        assert_eq!(mae(&[]), Err(AnalysisError::NoValidData));
    }

    #[test]
    fn inflation_matches_published_pairs() {
        assert_abs_diff_eq!(inflation_percent(28.04, 31.16), 11.1, epsilon = 0.05);
        assert_abs_diff_eq!(inflation_percent(28.12, 47.28), 68.1, epsilon = 0.05);
    }

    #[test]
    fn decomposition_columns() {
        let p = vec![run(1, &[2.0, 1.0], &[1.0, 1.0])];
        let rep = decomposition_report(Some(&p), None, Some(&p)).unwrap();
        assert_eq!(rep.inflation_pct, Some(0.0));
        let rep = decomposition_report(Some(&p), None, None).unwrap();
        assert!(rep.combined.is_none() && rep.inflation_pct.is_none());
        let mut q = p.clone();
        q.push(ForecastRun {
            issue_time: Utc.with_ymd_and_hms(2022, 1, 2, 7, 0, 0).unwrap(),
            ..p[0].clone()
        });
        assert!(matches!(
            decomposition_report(Some(&q), None, None),
            Err(AnalysisError::IssueHourMismatch(6, 7))
        ));
    }
}
