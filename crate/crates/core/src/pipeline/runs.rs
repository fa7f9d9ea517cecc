use std::io::{Read, Write};

use crate::erroranalysis::ForecastRun;
use crate::ingest::parse_timestamp;

use super::PipelineError;

/// Long format, one row per lead: `issue_time,lead,predicted,truth,valid`.
pub fn write_runs_csv<W: Write>(runs: &[ForecastRun], mut out: W) -> std::io::Result<()> {
    writeln!(out, "issue_time,lead,predicted,truth,valid")?;
    for r in runs {
        let t = r.issue_time.format("%Y-%m-%dT%H:%M:%SZ");
        for k in 0..r.leads() {
            writeln!(out, "{t},{},{},{},{}", k + 1, r.predicted[k], r.truth[k], r.valid[k])?;
        }
    }
    Ok(())
}

pub fn read_runs_csv<R: Read>(input: R, source: &str) -> Result<Vec<ForecastRun>, PipelineError> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut runs: Vec<ForecastRun> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let bad = |what: &str| PipelineError::Data(format!("{source} line {line}: {what}"));
        let rec = rec.map_err(|e| bad(&e.to_string()))?;
        if rec.len() != 5 {
            return Err(bad("expected 5 fields"));
        }
        let t = parse_timestamp(&rec[0]).ok_or_else(|| bad("unparseable issue_time"))?;
        let lead: usize = rec[1].parse().map_err(|_| bad("unparseable lead"))?;
        let p: f64 = rec[2].parse().map_err(|_| bad("unparseable predicted"))?;
        let y: f64 = rec[3].parse().map_err(|_| bad("unparseable truth"))?;
        let v: bool = rec[4].parse().map_err(|_| bad("unparseable valid flag"))?;
        let new_run = runs.last().is_none_or(|r| r.issue_time != t);
        if new_run {
            if lead != 1 {
                return Err(bad("run does not start at lead 1"));
            }
            runs.push(ForecastRun {
                issue_time: t,
                predicted: Vec::new(),
                truth: Vec::new(),
                valid: Vec::new(),
            });
        }
        let r = runs.last_mut().expect("pushed above");
        if lead != r.leads() + 1 {
            return Err(bad("leads out of order"));
        }
        r.predicted.push(p);
        r.truth.push(y);
        r.valid.push(v && p.is_finite() && y.is_finite());
    }
    Ok(runs)
}
