use std::io::{Read, Write};

use chrono::{DateTime, Duration, TimeZone, Timelike, Utc};
use serde::{Deserialize, Serialize};

use super::records::parse_timestamp;
use super::IngestError;

/// Physical unit carried by an [`HourlySeries`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// Raw power in watts.
    Watt,
    /// Power divided by rated peak power. Multiply by 1000 for W/kWp.
    PeakFraction,
    WattPerM2,
    Celsius,
    Degrees,
}

/// Hourly values on an implicit grid `start + i hours`, with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    start: DateTime<Utc>,
    values: Vec<f64>,
    valid: Vec<bool>,
    unit: Unit,
}

/// Truncates an instant to the start of its hour.
pub fn floor_hour(t: DateTime<Utc>) -> DateTime<Utc> {
    let secs = t.timestamp().div_euclid(3600) * 3600;
    Utc.timestamp_opt(secs, 0).single().expect("hour boundary in range")
}

pub fn is_hour_aligned(t: DateTime<Utc>) -> bool {
    t.minute() == 0 && t.second() == 0 && t.nanosecond() == 0
}

impl HourlySeries {
    pub fn new(
        start: DateTime<Utc>,
        values: Vec<f64>,
        valid: Vec<bool>,
        unit: Unit,
    ) -> Result<Self, IngestError> {
        if !is_hour_aligned(start) {
            return Err(IngestError::InvalidArgument(format!(
                "series start {start} is not on an hour boundary"
            )));
        }
        if values.len() != valid.len() {
            return Err(IngestError::InvalidArgument(format!(
                "{} values but {} validity flags",
                values.len(),
                valid.len()
            )));
        }
        let mut valid = valid;
        for (v, ok) in values.iter().zip(valid.iter_mut()) {
            if !v.is_finite() {
                *ok = false;
            }
        }
        if unit == Unit::PeakFraction {
            if let Some(i) = (0..values.len()).find(|&i| valid[i] && values[i] < 0.0) {
                return Err(IngestError::InvalidArgument(format!(
                    "negative normalized power {} at index {i}",
                    values[i]
                )));
            }
        }
        Ok(Self {
            start,
            values,
            valid,
            unit,
        })
    }

    /// Builds a series whose validity is "value is finite".
    pub fn from_values(start: DateTime<Utc>, values: Vec<f64>, unit: Unit) -> Result<Self, IngestError> {
        let valid = values.iter().map(|v| v.is_finite()).collect();
        Self::new(start, values, valid, unit)
    }

    pub fn empty(unit: Unit) -> Self {
        Self {
            start: DateTime::<Utc>::UNIX_EPOCH,
            values: Vec::new(),
            valid: Vec::new(),
            unit,
        }
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    /// First instant after the last slot.
    pub fn end(&self) -> DateTime<Utc> {
        self.time_at(self.len())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn time_at(&self, index: usize) -> DateTime<Utc> {
        self.start + Duration::hours(index as i64)
    }

    pub fn index_of(&self, t: DateTime<Utc>) -> Option<usize> {
        if !is_hour_aligned(t) || t < self.start {
            return None;
        }
        let i = ((t - self.start).num_hours()) as usize;
        (i < self.len()).then_some(i)
    }

    /// Value at `index` if the slot exists and is valid.
    pub fn get(&self, index: usize) -> Option<f64> {
        match self.valid.get(index) {
            Some(true) => Some(self.values[index]),
            _ => None,
        }
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn valid_fraction(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.valid_count() as f64 / self.len() as f64
        }
    }

    /// Same grid, same mask, values transformed slot by slot.
    pub fn map_values(&self, unit: Unit, f: impl Fn(f64) -> f64) -> Result<Self, IngestError> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Self::new(self.start, values, self.valid.clone(), unit)
    }

    /// Projects onto another hourly grid. Slots outside the original range are invalid.
    pub fn reindex(&self, start: DateTime<Utc>, len: usize) -> Result<Self, IngestError> {
        if !is_hour_aligned(start) {
            return Err(IngestError::InvalidArgument(format!(
                "reindex start {start} is not on an hour boundary"
            )));
        }
        let offset = (start - self.start).num_hours();
        let mut values = vec![f64::NAN; len];
        let mut valid = vec![false; len];
        for i in 0..len {
            let src = offset + i as i64;
            if src >= 0 && (src as usize) < self.len() {
                values[i] = self.values[src as usize];
                valid[i] = self.valid[src as usize];
            }
        }
        Self::new(start, values, valid, self.unit)
    }

    pub fn same_grid(&self, other: &HourlySeries) -> bool {
        self.start == other.start && self.len() == other.len()
    }

    /// Writes `timestamp,value,valid` rows. Values use the shortest
    /// representation that parses back to the identical `f64`.
    pub fn write_canonical<W: Write>(&self, writer: W) -> Result<(), IngestError> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| IngestError::Csv {
            source_name: "canonical output".into(),
            message: e.to_string(),
        };
        w.write_record(["timestamp", "value", "valid"]).map_err(io)?;
        for i in 0..self.len() {
            let ts = self.time_at(i).format("%Y-%m-%dT%H:%M:%SZ").to_string();
            let value = self.values[i].to_string();
            let valid = if self.valid[i] { "true" } else { "false" };
            w.write_record([ts.as_str(), value.as_str(), valid]).map_err(io)?;
        }
        w.flush().map_err(|e| IngestError::Io {
            path: "canonical output".into(),
            source: e,
        })
    }

    /// Reads a file produced by [`HourlySeries::write_canonical`].
    pub fn read_canonical<R: Read>(reader: R, unit: Unit, source_name: &str) -> Result<Self, IngestError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut start = None;
        let mut values = Vec::new();
        let mut valid = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let line = row as u64 + 2;
            let rec = rec.map_err(|e| IngestError::Csv {
                source_name: source_name.into(),
                message: format!("line {line}: {e}"),
            })?;
            let field = |k: usize| rec.get(k).unwrap_or("");
            let bad = |what: &str| IngestError::Csv {
                source_name: source_name.into(),
                message: format!("line {line}: unparseable {what}"),
            };
            let ts = parse_timestamp(field(0)).ok_or_else(|| bad("timestamp"))?;
            let start_ts = *start.get_or_insert(ts);
            let expected = start_ts + Duration::hours(values.len() as i64);
            if ts != expected {
                return Err(IngestError::Alignment(format!(
                    "{source_name} line {line}: expected {expected}, found {ts}"
                )));
            }
            values.push(field(1).parse::<f64>().map_err(|_| bad("value"))?);
            valid.push(match field(2) {
                "true" | "1" => true,
                "false" | "0" => false,
                _ => return Err(bad("validity flag")),
            });
        }
        match start {
            Some(s) => Self::new(s, values, valid, unit),
            None => Ok(Self::empty(unit)),
        }
    }
}

/// Smallest grid covering all non-empty series.
pub fn union_grid(series: &[&HourlySeries]) -> Option<(DateTime<Utc>, usize)> {
    let nonempty: Vec<_> = series.iter().filter(|s| !s.is_empty()).collect();
    let start = nonempty.iter().map(|s| s.start()).min()?;
    let end = nonempty.iter().map(|s| s.end()).max()?;
    Some((start, (end - start).num_hours() as usize))
}
