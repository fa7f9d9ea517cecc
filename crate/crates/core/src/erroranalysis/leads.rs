use std::io::Write;
use std::ops::RangeInclusive;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AnalysisError, ForecastRun};
use crate::distfit::{
    fit_generalized_hyperbolic, fit_normal, fit_student_t, moments, FittedDistribution, Moments,
};
use crate::features::pearson;

/// Errors of every run at every lead. Rows stay aligned by run so that
/// errors at different leads of the same forecast can be paired.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeadErrorSamples {
    pub issue_times: Vec<DateTime<Utc>>,
    /// `errors[run][lead]`, lead 0-based.
    pub errors: Vec<Vec<Option<f64>>>,
    pub leads: usize,
}

impl LeadErrorSamples {
    pub fn runs(&self) -> usize {
        self.errors.len()
    }

    /// Valid errors at 0-based `lead`, in run order.
    pub fn lead(&self, lead: usize) -> Vec<f64> {
        self.errors.iter().filter_map(|r| r[lead]).collect()
    }

    /// Long-format CSV: `issue_time,lead,error` for valid entries (1-based leads).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "issue_time,lead,error")?;
        for (t, row) in self.issue_times.iter().zip(&self.errors) {
            for (k, e) in row.iter().enumerate() {
                if let Some(e) = e {
                    writeln!(out, "{},{},{e}", t.format("%Y-%m-%dT%H:%M:%SZ"), k + 1)?;
                }
            }
        }
        Ok(())
    }
}

/// Pools errors per lead across runs. Seasons are not stratified.
pub fn lead_errors(runs: &[ForecastRun]) -> Result<LeadErrorSamples, AnalysisError> {
    let leads = runs.first().map_or(0, ForecastRun::leads);
    if let Some(r) = runs.iter().find(|r| r.leads() != leads) {
        return Err(AnalysisError::LeadMismatch {
            expected: leads,
            got: r.leads(),
        });
    }
    Ok(LeadErrorSamples {
        issue_times: runs.iter().map(|r| r.issue_time).collect(),
        errors: runs.iter().map(|r| r.errors().collect()).collect(),
        leads,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeadReportOptions {
    /// 1-based leads that get distribution fits.
    pub fit_leads: RangeInclusive<usize>,
    /// Fewer samples than this: moments only.
    pub min_fit_samples: usize,
}

impl Default for LeadReportOptions {
    fn default() -> Self {
        Self {
            fit_leads: 6..=20,
            min_fit_samples: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub family: &'static str,
    pub outcome: Result<FittedDistribution, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeadReport {
    /// 1-based.
    pub lead: usize,
    pub n: usize,
    /// `None` below four samples.
    pub moments: Option<Moments>,
    pub fits: Vec<FitRecord>,
}

impl LeadReport {
    pub fn fit(&self, family: &str) -> Option<&FitRecord> {
        self.fits.iter().find(|f| f.family == family)
    }
}

fn fit_all(x: &[f64]) -> Vec<FitRecord> {
    let rec = |family, r: Result<FittedDistribution, crate::distfit::DistError>| FitRecord {
        family,
        outcome: r.map_err(|e| e.to_string()),
    };
    vec![
        rec("normal", fit_normal(x)),
        rec("student_t", fit_student_t(x)),
        rec("generalized_hyperbolic", fit_generalized_hyperbolic(x)),
    ]
}

/// Moments for every lead; normal, t and GH fits with KS/CvM tests for the
/// leads in `opts.fit_leads` with enough non-degenerate samples.
pub fn lead_report(samples: &LeadErrorSamples, opts: &LeadReportOptions) -> Vec<LeadReport> {
    (0..samples.leads)
        .into_par_iter()
        .map(|k| {
            let x = samples.lead(k);
            let m = moments(&x).ok();
            let fit = opts.fit_leads.contains(&(k + 1))
                && x.len() >= opts.min_fit_samples
                && matches!(m, Some(Moments::Summary(_)));
            LeadReport {
                lead: k + 1,
                n: x.len(),
                moments: m,
                fits: if fit { fit_all(&x) } else { Vec::new() },
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceCorrelation {
    pub distance: usize,
    pub pearson: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairCorrelation {
    /// 1-based.
    pub lead_a: usize,
    pub lead_b: usize,
    pub pearson: Option<f64>,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutocorrelationReport {
    pub pooled: Vec<DistanceCorrelation>,
    pub per_pair: Vec<PairCorrelation>,
    pub warnings: Vec<String>,
}

/// For each lead distance `d` in `0..=max_distance`, Pearson correlation of
/// `(e_k, e_{k+d})` pooled over all lead pairs and all runs where both are
/// valid. Distances with fewer than `min_pairs` pairs or an undefined
/// correlation are omitted with a warning.
pub fn temporal_autocorrelation(
    samples: &LeadErrorSamples,
    max_distance: usize,
    min_pairs: usize,
) -> AutocorrelationReport {
    let mut rep = AutocorrelationReport {
        pooled: Vec::new(),
        per_pair: Vec::new(),
        warnings: Vec::new(),
    };
    for d in 0..=max_distance.min(samples.leads.saturating_sub(1)) {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for k in 0..samples.leads - d {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for row in &samples.errors {
                if let (Some(x), Some(y)) = (row[k], row[k + d]) {
                    a.push(x);
                    b.push(y);
                }
            }
            if d > 0 {
                rep.per_pair.push(PairCorrelation {
                    lead_a: k + 1,
                    lead_b: k + d + 1,
                    pearson: if a.len() >= min_pairs { pearson(&a, &b).ok() } else { None },
                    pairs: a.len(),
                });
            }
            xs.extend(a);
            ys.extend(b);
        }
        if xs.len() < min_pairs {
            rep.warnings
                .push(format!("distance {d}: only {} pairs, need {min_pairs}", xs.len()));
            continue;
        }
        match pearson(&xs, &ys) {
            Ok(r) => rep.pooled.push(DistanceCorrelation {
                distance: d,
                pearson: r,
                pairs: xs.len(),
            }),
            Err(e) => rep.warnings.push(format!("distance {d}: {e}")),
        }
    }
    if max_distance >= samples.leads && samples.leads > 0 {
        rep.warnings.push(format!(
            "distances above {} exceed the horizon",
            samples.leads - 1
        ));
    }
    rep
}
