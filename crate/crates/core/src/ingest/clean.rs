use super::records::RawRecord;
use super::series::{floor_hour, HourlySeries, Unit};
use super::IngestError;

/// Fraction of peak power below which negative readings are treated as invalid
/// rather than standby losses.
pub const STANDBY_BAND: f64 = 0.05;

/// Standby-loss and outlier cleaning for raw inverter power.
///
/// Readings in `[-0.05·peak, 0)` become 0. Readings below that band or above
/// `outlier_factor·peak` are kept but marked invalid.
///
/// # Panics
/// If `peak_power <= 0` or `outlier_factor <= 1`.
pub fn clean_power(records: &[RawRecord], peak_power: f64, outlier_factor: f64) -> Vec<RawRecord> {
    assert!(peak_power > 0.0, "peak power must be positive");
    assert!(outlier_factor > 1.0, "outlier factor must exceed 1");
    let floor = -STANDBY_BAND * peak_power;
    let ceiling = outlier_factor * peak_power;
    records
        .iter()
        .map(|r| {
            let mut r = *r;
            if r.valid {
                if r.value < floor || r.value > ceiling {
                    r.valid = false;
                } else if r.value < 0.0 {
                    r.value = 0.0;
                }
            }
            r
        })
        .collect()
}

/// Period means on left-labeled hour buckets `[H, H+1)`.
///
/// The grid spans the hour of the first record to the hour of the last; hours
/// without a valid reading are invalid slots.
pub fn resample_hourly_mean(records: &[RawRecord], unit: Unit) -> HourlySeries {
    let (Some(first), Some(last)) = (records.first(), records.last()) else {
        return HourlySeries::empty(unit);
    };
    let start = floor_hour(first.timestamp);
    let len = ((floor_hour(last.timestamp) - start).num_hours() + 1) as usize;
    let mut sums = vec![0.0; len];
    let mut counts = vec![0usize; len];
    for r in records.iter().filter(|r| r.valid) {
        let idx = (floor_hour(r.timestamp) - start).num_hours() as usize;
        sums[idx] += r.value;
        counts[idx] += 1;
    }
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect();
    let valid = counts.iter().map(|&c| c > 0).collect();
    HourlySeries::new(start, values, valid, unit).expect("bucketed series is well formed")
}

/// Divides raw watts by peak power. Invalid slots stay invalid.
pub fn normalize_by_peak(series: &HourlySeries, peak_power: f64) -> Result<HourlySeries, IngestError> {
    if !(peak_power > 0.0) {
        return Err(IngestError::InvalidArgument(format!(
            "peak power must be positive, got {peak_power}"
        )));
    }
    if series.unit() != Unit::Watt {
        return Err(IngestError::InvalidArgument(format!(
            "expected a series in watts, got {:?}",
            series.unit()
        )));
    }
    series.map_values(Unit::PeakFraction, |v| v / peak_power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{DateTime, Duration, TimeZone, Utc};
    use proptest::prelude::*;

    fn h(hour: u32, min: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2022, 6, 1, hour, min, 0).unwrap()
    }

    #[test]
    fn standby_loss_clamped() {
        let out = clean_power(&[RawRecord::new(h(0, 0), -3.0)], 2400.0, 1.5);
        assert_eq!(out[0].value, 0.0);
        assert!(out[0].valid);
    }

    #[test]
    fn extreme_outlier_invalidated() {
        let out = clean_power(&[RawRecord::new(h(0, 0), 30_000.0)], 2400.0, 1.5);
        assert!(!out[0].valid);
    }

    #[test]
    fn in_range_unchanged() {
        let out = clean_power(&[RawRecord::new(h(0, 0), 1200.0)], 2400.0, 1.5);
        assert_eq!(out[0], RawRecord::new(h(0, 0), 1200.0));
    }

    #[test]
    fn large_negative_invalidated() {
        let out = clean_power(&[RawRecord::new(h(0, 0), -500.0)], 2400.0, 1.5);
        assert!(!out[0].valid);
    }

    #[test]
    fn quarter_hour_mean() {
        let recs: Vec<_> = [0.0, 100.0, 200.0, 300.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| RawRecord::new(h(10, 15 * i as u32), v))
            .collect();
        let s = resample_hourly_mean(&recs, Unit::Watt);
        assert_eq!(s.len(), 1);
        assert_eq!(s.start(), h(10, 0));
        assert_eq!(s.get(0), Some(150.0));
    }

    #[test]
    fn empty_hour_is_invalid() {
        let recs = vec![RawRecord::new(h(1, 0), 1.0), RawRecord::new(h(3, 59), 3.0)];
        let s = resample_hourly_mean(&recs, Unit::Watt);
        assert_eq!(s.valid(), &[true, false, true]);
    }

    #[test]
    fn single_minute_sample() {
        let s = resample_hourly_mean(&[RawRecord::new(h(7, 1), 50.0)], Unit::Watt);
        assert_eq!(s.get(0), Some(50.0));
    }

    #[test]
    fn invalid_records_do_not_count() {
        let recs = vec![RawRecord::new(h(1, 0), f64::NAN), RawRecord::new(h(1, 30), 4.0)];
        assert_eq!(resample_hourly_mean(&recs, Unit::Watt).get(0), Some(4.0));
        let recs = vec![RawRecord::new(h(1, 0), f64::NAN)];
        assert_eq!(resample_hourly_mean(&recs, Unit::Watt).valid(), &[false]);
    }

    #[test]
    fn normalize() {
        let s = HourlySeries::new(h(0, 0), vec![1200.0, 0.0, f64::NAN], vec![true, true, false], Unit::Watt).unwrap();
        let n = normalize_by_peak(&s, 2400.0).unwrap();
        assert_eq!(n.values()[..2], [0.5, 0.0]);
        assert_eq!(n.valid(), &[true, true, false]);
        assert_eq!(n.unit(), Unit::PeakFraction);
        assert!(normalize_by_peak(&s, 0.0).is_err());
        assert!(normalize_by_peak(&n, 2400.0).is_err());
    }

    proptest! {
        #[test]
        fn resampling_hourly_data_is_idempotent(vals in prop::collection::vec(-1e6f64..1e6, 1..60)) {
            let recs: Vec<_> = vals.iter().enumerate()
                .map(|(i, &v)| RawRecord::new(h(0, 0) + Duration::hours(i as i64), v))
                .collect();
            let once = resample_hourly_mean(&recs, Unit::Watt);
            let again: Vec<_> = (0..once.len())
                .map(|i| RawRecord { timestamp: once.time_at(i), value: once.values()[i], valid: once.valid()[i] })
                .collect();
            let twice = resample_hourly_mean(&again, Unit::Watt);
            prop_assert_eq!(once.values(), twice.values());
            prop_assert_eq!(once.values(), &vals[..]);
        }

        #[test]
        fn cleaning_never_grows_magnitude(v in -1e5f64..1e5, peak in 1.0f64..1e4, factor in 1.01f64..3.0) {
            let out = clean_power(&[RawRecord::new(h(0, 0), v)], peak, factor)[0];
            prop_assert!(out.value.abs() <= v.abs());
            if v >= 0.0 && v <= factor * peak {
                prop_assert_eq!(out, RawRecord::new(h(0, 0), v));
            }
        }
    }
}
