//! Lead-wise forecast error statistics: MBE/MAE decomposition, per-lead
//! distribution fits and the correlation of errors across leads.

mod leads;
mod metrics;

use chrono::{DateTime, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distfit::DistError;

pub use self::leads::{
    lead_errors, lead_report, temporal_autocorrelation, AutocorrelationReport, DistanceCorrelation, FitRecord,
    LeadErrorSamples, LeadReport, LeadReportOptions, PairCorrelation,
};
pub use self::metrics::{decomposition_report, inflation_percent, mae, mbe, DecompositionReport, ErrorMetrics};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("no valid forecast/truth pairs")]
    NoValidData,
    #[error("run has {got} leads, expected {expected}")]
    LeadMismatch { expected: usize, got: usize },
    #[error("runs issued at different hours ({0} and {1} UTC)")]
    IssueHourMismatch(u32, u32),
    #[error("predicted, truth and mask lengths differ")]
    LengthMismatch,
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// One forecast issued at `issue_time` for leads `1..=f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRun {
    pub issue_time: DateTime<Utc>,
    pub predicted: Vec<f64>,
    pub truth: Vec<f64>,
    pub valid: Vec<bool>,
}

impl ForecastRun {
    /// Leads with a non-finite prediction or truth are marked invalid.
    pub fn new(
        issue_time: DateTime<Utc>,
        predicted: Vec<f64>,
        truth: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self, AnalysisError> {
        if predicted.len() != truth.len() || truth.len() != valid.len() {
            return Err(AnalysisError::LengthMismatch);
        }
        let valid = valid
            .iter()
            .zip(predicted.iter().zip(&truth))
            .map(|(&v, (p, t))| v && p.is_finite() && t.is_finite())
            .collect();
        Ok(Self {
            issue_time,
            predicted,
            truth,
            valid,
        })
    }

    pub fn leads(&self) -> usize {
        self.valid.len()
    }

    /// `p̂ − p̃` per lead, `None` where invalid.
    pub fn errors(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        self.predicted
            .iter()
            .zip(&self.truth)
            .zip(&self.valid)
            .map(|((p, t), &v)| v.then(|| p - t))
    }

    /// Multiplies predictions and truth, e.g. by 1000 for W/kWp.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            issue_time: self.issue_time,
            predicted: self.predicted.iter().map(|v| v * factor).collect(),
            truth: self.truth.iter().map(|v| v * factor).collect(),
            valid: self.valid.clone(),
        }
    }
}

fn check_issue_hours(runs: &[ForecastRun]) -> Result<(), AnalysisError> {
    if let Some(first) = runs.first() {
        let h = first.issue_time.hour();
        if let Some(r) = runs.iter().find(|r| r.issue_time.hour() != h) {
            return Err(AnalysisError::IssueHourMismatch(h, r.issue_time.hour()));
        }
    }
    Ok(())
}
