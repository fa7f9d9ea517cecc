use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use super::IngestError;

/// One timestamped reading in native units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawRecord {
    pub timestamp: DateTime<Utc>,
    pub value: f64,
    pub valid: bool,
}

impl RawRecord {
    pub fn new(timestamp: DateTime<Utc>, value: f64) -> Self {
        Self {
            timestamp,
            value,
            valid: value.is_finite(),
        }
    }
}

/// Which columns of an input CSV hold the timestamp and the value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub timestamp: String,
    pub value: String,
}

impl CsvSchema {
    pub fn new(timestamp: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            timestamp: timestamp.into(),
            value: value.into(),
        }
    }
}

/// A row that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedCsv {
    /// Sorted by timestamp, no duplicates.
    pub records: Vec<RawRecord>,
    pub rejected: Vec<RejectedRow>,
}

const NAIVE_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%d %H:%M",
];

/// Parses ISO-8601 UTC timestamps, with or without seconds and with a
/// trailing `Z`, an explicit offset, or no zone designator at all.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    if let Ok(t) = DateTime::parse_from_str(s, "%Y-%m-%dT%H:%M%:z") {
        return Some(t.with_timezone(&Utc));
    }
    let naive = s
        .strip_suffix('Z')
        .or_else(|| s.strip_suffix("+00:00"))
        .unwrap_or(s);
    NAIVE_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(naive, f).ok())
        .map(|t| t.and_utc())
}

fn parse_value(s: &str) -> Result<f64, ()> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(f64::NAN);
    }
    s.parse::<f64>().map_err(|_| ())
}

pub fn parse_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<ParsedCsv, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_csv_reader(file, schema, &path.display().to_string())
}

/// Parses one value column. Empty cells and `NaN` become invalid records;
/// rows with unparseable fields are listed in [`ParsedCsv::rejected`].
pub fn parse_csv_reader<R: Read>(
    reader: R,
    schema: &CsvSchema,
    source_name: &str,
) -> Result<ParsedCsv, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::Csv {
            source_name: source_name.into(),
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::MissingColumn {
                source_name: source_name.into(),
                column: name.into(),
            })
    };
    let ts_col = column(&schema.timestamp)?;
    let val_col = column(&schema.value)?;

    let mut out = ParsedCsv::default();
    for (row, rec) in rdr.records().enumerate() {
        let line = row as u64 + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                out.rejected.push(RejectedRow {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let Some(ts) = rec.get(ts_col).and_then(parse_timestamp) else {
            out.rejected.push(RejectedRow {
                line,
                reason: format!("unparseable timestamp {:?}", rec.get(ts_col).unwrap_or("")),
            });
            continue;
        };
        match parse_value(rec.get(val_col).unwrap_or("")) {
            Ok(v) => out.records.push(RawRecord::new(ts, v)),
            Err(()) => out.rejected.push(RejectedRow {
                line,
                reason: format!("unparseable value {:?}", rec.get(val_col).unwrap_or("")),
            }),
        }
    }

    out.records.sort_by_key(|r| r.timestamp);
    if let Some(w) = out.records.windows(2).find(|w| w[0].timestamp == w[1].timestamp) {
        return Err(IngestError::DuplicateTimestamp {
            source_name: source_name.into(),
            timestamp: w[0].timestamp,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn schema() -> CsvSchema {
        CsvSchema::new("timestamp", "power")
    }

    #[test]
    fn two_rows_in_order() {
        let data = "timestamp,power\n2022-01-01T01:00Z,110\n2022-01-01T00:00Z,100\n";
        let p = parse_csv_reader(data.as_bytes(), &schema(), "t").unwrap();
        assert_eq!(p.records.len(), 2);
        assert_eq!(p.records[0].timestamp, Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap());
        assert_eq!(p.records[0].value, 100.0);
        assert_eq!(p.records[1].value, 110.0);
        assert!(p.rejected.is_empty());
    }

    #[test]
    fn empty_data_section() {
        let p = parse_csv_reader("timestamp,power\n".as_bytes(), &schema(), "t").unwrap();
        assert!(p.records.is_empty());
    }

    #[test]
    fn nan_value_is_invalid_record() {
        let p = parse_csv_reader("timestamp,power\n2022-01-01T00:00:00Z,NaN\n2022-01-01T00:05:00Z,\n".as_bytes(), &schema(), "t")
            .unwrap();
        assert_eq!(p.records.len(), 2);
        assert!(p.records.iter().all(|r| !r.valid));
    }

    #[test]
    fn missing_column_is_schema_error() {
        let err = parse_csv_reader("timestamp,ghi\n".as_bytes(), &schema(), "t").unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn { ref column, .. } if column == "power"));
    }

    #[test]
    fn duplicate_timestamp_names_it() {
        let data = "timestamp,power\n2022-01-01T00:00Z,1\n2022-01-01T00:00:00+00:00,2\n";
        let err = parse_csv_reader(data.as_bytes(), &schema(), "t").unwrap_err();
        assert!(err.to_string().contains("2022-01-01 00:00:00"), "{err}");
    }

    #[test]
    fn garbage_rows_are_reported() {
        let data = "timestamp,power\nyesterday,1\n2022-01-01T00:00Z,abc\n2022-01-01T01:00Z,3\n";
        let p = parse_csv_reader(data.as_bytes(), &schema(), "t").unwrap();
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.rejected.iter().map(|r| r.line).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn timestamp_formats() {
        let want = Utc.with_ymd_and_hms(2022, 3, 4, 5, 6, 0).unwrap();
        for s in [
            "2022-03-04T05:06:00Z",
            "2022-03-04T05:06Z",
            "2022-03-04 05:06:00",
            "2022-03-04T05:06:00+00:00",
            "2022-03-04T07:06:00+02:00",
        ] {
            assert_eq!(parse_timestamp(s), Some(want), "{s}");
        }
    }
}
