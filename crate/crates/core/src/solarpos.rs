//! Geometric solar elevation from low-precision solar coordinates
//! (declination and equation of time) and the local hour angle. Refraction is ignored and
//! night-time angles are clamped to zero.

use chrono::{DateTime, Duration, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{HourlySeries, SiteMeta, Unit};

#[derive(Debug, Error, PartialEq)]
pub enum SolarError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
    #[error("elevation series needs at least one hour")]
    EmptySeries,
    #[error("series start {0} is not on an hour boundary")]
    UnalignedStart(DateTime<Utc>),
}

/// Solar elevation in degrees, in `[0, 90]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SolarAngle(f64);

impl SolarAngle {
    pub fn from_unclamped(degrees: f64) -> Self {
        Self(degrees.clamp(0.0, 90.0))
    }

    pub fn degrees(self) -> f64 {
        self.0
    }
}

/// Where inside an hourly slot the geometry is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeAnchor {
    /// `H + 30 min`, matching period-mean resampling.
    #[default]
    Midpoint,
    Start,
}

impl TimeAnchor {
    pub fn offset(self) -> Duration {
        match self {
            TimeAnchor::Midpoint => Duration::minutes(30),
            TimeAnchor::Start => Duration::zero(),
        }
    }
}

fn check_coordinates(lat: f64, lon: f64) -> Result<(), SolarError> {
    if !(-90.0..=90.0).contains(&lat) {
        return Err(SolarError::Latitude(lat));
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(SolarError::Longitude(lon));
    }
    Ok(())
}

/// Declination (radians) and equation of time (minutes) at `t`, from the
/// low-precision solar coordinates (mean anomaly and longitude, ecliptic
/// longitude with two equation-of-centre terms, linear obliquity). Good to
/// about one arcminute for several centuries around J2000.
pub fn declination_and_eot(t: DateTime<Utc>) -> (f64, f64) {
    let secs = t.timestamp() as f64 + t.timestamp_subsec_nanos() as f64 * 1e-9;
    let d = secs / 86_400.0 - 10_957.5; // days since J2000.0
    let g = (357.529 + 0.985_600_28 * d).rem_euclid(360.0).to_radians();
    let q = (280.459 + 0.985_647_36 * d).rem_euclid(360.0);
    let ecliptic = (q + 1.915 * g.sin() + 0.020 * (2.0 * g).sin()).to_radians();
    let obliquity = (23.439 - 0.000_000_36 * d).to_radians();
    let right_ascension = (obliquity.cos() * ecliptic.sin()).atan2(ecliptic.cos()).to_degrees();
    let decl = (obliquity.sin() * ecliptic.sin()).asin();
    let eot = 4.0 * ((q - right_ascension + 180.0).rem_euclid(360.0) - 180.0);
    (decl, eot)
}

/// Elevation in degrees before clamping; negative below the horizon.
pub fn unclamped_elevation(lat: f64, lon: f64, t: DateTime<Utc>) -> Result<f64, SolarError> {
    check_coordinates(lat, lon)?;
    let (decl, eot) = declination_and_eot(t);
    let minutes = t.hour() as f64 * 60.0 + t.minute() as f64 + t.second() as f64 / 60.0;
    let true_solar_minutes = minutes + eot + 4.0 * lon;
    let hour_angle = (true_solar_minutes / 4.0 - 180.0).to_radians();
    let phi = lat.to_radians();
    let sin_elev = phi.sin() * decl.sin() + phi.cos() * decl.cos() * hour_angle.cos();
    Ok(sin_elev.clamp(-1.0, 1.0).asin().to_degrees())
}

pub fn solar_elevation(lat: f64, lon: f64, t: DateTime<Utc>) -> Result<SolarAngle, SolarError> {
    unclamped_elevation(lat, lon, t).map(SolarAngle::from_unclamped)
}

/// Hourly elevations for `count` slots starting at `start`; all slots valid.
pub fn elevation_series(
    site: &SiteMeta,
    start: DateTime<Utc>,
    count: usize,
    anchor: TimeAnchor,
) -> Result<HourlySeries, SolarError> {
    if count == 0 {
        return Err(SolarError::EmptySeries);
    }
    check_coordinates(site.latitude, site.longitude)?;
    if start.timestamp().rem_euclid(3600) != 0 || start.timestamp_subsec_nanos() != 0 {
        return Err(SolarError::UnalignedStart(start));
    }
    let values = (0..count)
        .map(|i| {
            let t = start + Duration::hours(i as i64) + anchor.offset();
            solar_elevation(site.latitude, site.longitude, t).map(SolarAngle::degrees)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(HourlySeries::from_values(start, values, Unit::Degrees).expect("hour-aligned start"))
}
