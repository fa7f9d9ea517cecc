//! Versioned evaluation summary and its plain-text tables.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::distfit::Moments;
use crate::erroranalysis::{DecompositionReport, DistanceCorrelation, ErrorMetrics, LeadReport};

pub const SUMMARY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyTests {
    pub family: String,
    pub ks_p: Option<f64>,
    pub cvm_p: Option<f64>,
    /// Why no p-values are available: fit error or non-convergence.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadRow {
    /// 1-based.
    pub lead: usize,
    pub n: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    /// Empty for leads without fits.
    pub tests: Vec<FamilyTests>,
}

impl LeadRow {
    pub fn from_report(r: &LeadReport) -> Self {
        let (mean, std, skewness, kurtosis) = match r.moments {
            Some(Moments::Summary(s)) => (Some(s.mean), Some(s.std), Some(s.skewness), Some(s.kurtosis)),
            Some(Moments::Degenerate { mean, .. }) => (Some(mean), Some(0.0), None, None),
            None => (None, None, None, None),
        };
        let tests = r
            .fits
            .iter()
            .map(|f| match &f.outcome {
                Ok(fd) if fd.converged => FamilyTests {
                    family: f.family.to_string(),
                    ks_p: fd.ks.map(|t| t.p),
                    cvm_p: fd.cvm.map(|t| t.p),
                    failure: None,
                },
                Ok(_) => FamilyTests {
                    family: f.family.to_string(),
                    ks_p: None,
                    cvm_p: None,
                    failure: Some("did not converge".into()),
                },
                Err(e) => FamilyTests {
                    family: f.family.to_string(),
                    ks_p: None,
                    cvm_p: None,
                    failure: Some(e.clone()),
                },
            })
            .collect();
        Self {
            lead: r.lead,
            n: r.n,
            mean,
            std,
            skewness,
            kurtosis,
            tests,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub runs: usize,
    pub leads: Vec<LeadRow>,
    pub autocorrelation: Vec<DistanceCorrelation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub version: u32,
    pub decomposition: DecompositionReport,
    /// Keyed by forecast mode (`perfect`, `nwp`).
    pub modes: BTreeMap<String, ModeSummary>,
}

fn num(v: Option<f64>, prec: usize) -> String {
    match v {
        Some(v) if v.is_finite() => format!("{v:.prec$}"),
        _ => "-".into(),
    }
}

/// MBE/MAE per error source, with the MAE inflation when both the plant and
/// combined columns exist.
pub fn render_decomposition(d: &DecompositionReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<28} {:>10} {:>10} {:>6}", "error source", "MBE", "MAE", "runs");
    let rows: [(&str, Option<ErrorMetrics>); 3] = [
        ("plant model [W/kWp]", d.plant),
        ("weather forecast [W/m2]", d.weather),
        ("combined [W/kWp]", d.combined),
    ];
    for (name, m) in rows {
        match m {
            Some(m) => {
                let _ = writeln!(s, "{name:<28} {:>10.2} {:>10.2} {:>6}", m.mbe, m.mae, m.runs);
            }
            None => {
                let _ = writeln!(s, "{name:<28} {:>10} {:>10} {:>6}", "absent", "absent", "-");
            }
        }
    }
    if let Some(p) = d.inflation_pct {
        let _ = writeln!(s, "MAE inflation from weather forecast: {p:+.1}%");
    }
    s
}

/// Per-lead moments and KS/CvM p-values. `-` marks a failed or
/// non-converged fit; leads without fits leave the test columns blank.
pub fn render_lead_table(mode: &str, m: &ModeSummary) -> String {
    const FAMILIES: [(&str, &str); 3] = [("normal", "N"), ("student_t", "t"), ("generalized_hyperbolic", "GH")];
    let mut s = String::new();
    let _ = writeln!(s, "lead errors, {mode} mode ({} runs)", m.runs);
    let _ = write!(s, "{:>4} {:>5} {:>9} {:>9} {:>7} {:>7}", "lead", "n", "mean", "std", "skew", "kurt");
    for (_, short) in FAMILIES {
        let _ = write!(s, " {:>8} {:>8}", format!("KS {short}"), format!("CvM {short}"));
    }
    s.push('\n');
    for r in &m.leads {
        let _ = write!(
            s,
            "{:>4} {:>5} {:>9} {:>9} {:>7} {:>7}",
            r.lead,
            r.n,
            num(r.mean, 2),
            num(r.std, 2),
            num(r.skewness, 2),
            num(r.kurtosis, 2)
        );
        if !r.tests.is_empty() {
            for (family, _) in FAMILIES {
                let t = r.tests.iter().find(|t| t.family == family);
                let (ks, cvm) = t.map_or((None, None), |t| (t.ks_p, t.cvm_p));
                let _ = write!(s, " {:>8} {:>8}", num(ks, 3), num(cvm, 3));
            }
        }
        s.push('\n');
    }
    if !m.autocorrelation.is_empty() {
        let _ = write!(s, "error correlation by lead distance:");
        for d in &m.autocorrelation {
            let _ = write!(s, " r({})={:.2}", d.distance, d.pearson);
        }
        s.push('\n');
    }
    s
}

impl EvalSummary {
    pub fn render(&self) -> String {
        let mut s = render_decomposition(&self.decomposition);
        for (mode, m) in &self.modes {
            s.push('\n');
            s.push_str(&render_lead_table(mode, m));
        }
        s
    }
}
