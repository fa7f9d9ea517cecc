//! Reading, cleaning, hourly resampling and windowing of PV power and
//! weather time series.
//!
//! Raw inputs are per-column CSV extracts ([`parse_csv`]). Power goes through
//! [`clean_power`], every series through [`resample_hourly_mean`], and power is
//! finally scaled by the plant's rated peak ([`normalize_by_peak`]). Aligned
//! hourly series are cut into [`SampleWindow`]s at a fixed daily issue hour.

mod clean;
mod records;
mod series;
mod window;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::clean::{clean_power, normalize_by_peak, resample_hourly_mean, STANDBY_BAND};
pub use self::records::{parse_csv, parse_csv_reader, parse_timestamp, CsvSchema, ParsedCsv, RawRecord, RejectedRow};
pub use self::series::{floor_hour, is_hour_aligned, union_grid, HourlySeries, Unit};
pub use self::window::{build_inference_windows, build_samples, split_by_date, SampleWindow, WindowSpec};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}: missing column `{column}`")]
    MissingColumn { source_name: String, column: String },
    #[error("{source_name}: duplicate timestamp {timestamp}")]
    DuplicateTimestamp {
        source_name: String,
        timestamp: DateTime<Utc>,
    },
    #[error("{source_name}: {message}")]
    Csv { source_name: String, message: String },
    #[error("misaligned series: {0}")]
    Alignment(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Location and rating of a PV plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteMeta {
    /// Degrees north.
    pub latitude: f64,
    /// Degrees east.
    pub longitude: f64,
    /// Rated peak power in watts.
    pub peak_power: f64,
    pub utc_offset_hours: i32,
}

impl SiteMeta {
    pub fn new(latitude: f64, longitude: f64, peak_power: f64, utc_offset_hours: i32) -> Result<Self, IngestError> {
        let site = Self {
            latitude,
            longitude,
            peak_power,
            utc_offset_hours,
        };
        site.validate()?;
        Ok(site)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Err(IngestError::InvalidArgument(format!("latitude {} out of range", self.latitude)));
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Err(IngestError::InvalidArgument(format!("longitude {} out of range", self.longitude)));
        }
        if !(self.peak_power > 0.0) {
            return Err(IngestError::InvalidArgument(format!(
                "peak power must be positive, got {}",
                self.peak_power
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn site_ranges() {
        assert!(SiteMeta::new(39.74, -105.18, 2400.0, -7).is_ok());
        assert!(SiteMeta::new(91.0, 0.0, 1.0, 0).is_err());
        assert!(SiteMeta::new(0.0, -181.0, 1.0, 0).is_err());
        assert!(SiteMeta::new(0.0, 0.0, 0.0, 0).is_err());
    }
}
