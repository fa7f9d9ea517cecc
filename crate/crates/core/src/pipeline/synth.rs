//! Desk-scale synthetic plant: clear-sky envelope from solar geometry, a
//! persistent multiplicative cloud process and a biased, autocorrelated
//! surrogate for numerical weather forecasts.

use std::f64::consts::PI;
use std::io::Write;

use chrono::{DateTime, Datelike, Duration, TimeZone, Timelike, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::ingest::SiteMeta;
use crate::solarpos::unclamped_elevation;

const STEPS_PER_HOUR: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticScenario {
    pub start: DateTime<Utc>,
    pub days: usize,
    /// Mean clear-sky index.
    pub cloud_mean: f64,
    /// Hour-to-hour autocorrelation of the clear-sky index.
    pub cloud_persistence: f64,
    /// Stationary standard deviation of the clear-sky index.
    pub cloud_std: f64,
    /// Daytime GHI forecast bias, W/m².
    pub nwp_bias: f64,
    /// Stationary standard deviation of the GHI forecast noise, W/m².
    pub nwp_noise: f64,
    pub nwp_noise_persistence: f64,
    /// Temperature forecast noise, °C.
    pub nwp_temp_noise: f64,
    pub temp_mean: f64,
    pub temp_seasonal_amplitude: f64,
    pub temp_daily_amplitude: f64,
    pub temp_noise: f64,
    /// AC output at 1000 W/m² and 25 °C cell temperature, as a fraction of peak.
    pub plant_gain: f64,
    /// Relative power change per °C of cell temperature above 25 °C.
    pub temp_coefficient: f64,
    /// Measurement noise on 15-minute power, as a fraction of peak.
    pub power_noise: f64,
    /// Night-time standby draw, as a fraction of peak (written negative).
    pub standby: f64,
    /// Probability that a 15-minute reading is a spurious spike.
    pub spike_rate: f64,
}

impl Default for SyntheticScenario {
    fn default() -> Self {
        Self {
            start: Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap(),
            days: 730,
            cloud_mean: 0.75,
            cloud_persistence: 0.85,
            cloud_std: 0.25,
            nwp_bias: 20.0,
            nwp_noise: 60.0,
            nwp_noise_persistence: 0.8,
            nwp_temp_noise: 1.5,
            temp_mean: 12.0,
            temp_seasonal_amplitude: 10.0,
            temp_daily_amplitude: 5.0,
            temp_noise: 1.0,
            plant_gain: 0.85,
            temp_coefficient: -0.004,
            power_noise: 0.005,
            standby: 0.001,
            spike_rate: 1e-4,
        }
    }
}

impl SyntheticScenario {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(format!("synth: {m}")));
        if self.days == 0 {
            return bad("days must be at least 1".into());
        }
        if self.start.timestamp() % 3600 != 0 {
            return bad(format!("start {} is not on the hour", self.start));
        }
        for (name, v) in [
            ("cloud_std", self.cloud_std),
            ("nwp_noise", self.nwp_noise),
            ("nwp_temp_noise", self.nwp_temp_noise),
            ("temp_noise", self.temp_noise),
            ("temp_seasonal_amplitude", self.temp_seasonal_amplitude),
            ("temp_daily_amplitude", self.temp_daily_amplitude),
            ("power_noise", self.power_noise),
            ("standby", self.standby),
            ("plant_gain", self.plant_gain),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite value >= 0, got {v}"));
            }
        }
        for (name, v) in [
            ("cloud_persistence", self.cloud_persistence),
            ("nwp_noise_persistence", self.nwp_noise_persistence),
        ] {
            if !(0.0..1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1), got {v}"));
            }
        }
        if !(self.cloud_mean > 0.0 && self.cloud_mean <= 1.2) {
            return bad(format!("cloud_mean must lie in (0, 1.2], got {}", self.cloud_mean));
        }
        if !(0.0..=1.0).contains(&self.spike_rate) {
            return bad(format!("spike_rate must lie in [0, 1], got {}", self.spike_rate));
        }
        if !self.nwp_bias.is_finite() || !self.temp_mean.is_finite() || !self.temp_coefficient.is_finite() {
            return bad("bias, temperature mean and coefficient must be finite".into());
        }
        Ok(())
    }
}

/// Hourly weather: `ghi` in W/m², `temp_air` in °C.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherTable {
    pub times: Vec<DateTime<Utc>>,
    pub ghi: Vec<f64>,
    pub temp_air: Vec<f64>,
}

impl WeatherTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "timestamp,ghi,temp_air")?;
        for i in 0..self.times.len() {
            writeln!(out, "{},{},{}", stamp(self.times[i]), self.ghi[i], self.temp_air[i])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    /// 15-minute inverter readings in watts.
    pub power: Vec<(DateTime<Utc>, f64)>,
    pub observations: WeatherTable,
    pub forecasts: WeatherTable,
}

impl SyntheticData {
    pub fn write_power_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "timestamp,power_w")?;
        for (t, p) in &self.power {
            writeln!(out, "{},{p}", stamp(*t))?;
        }
        Ok(())
    }
}

fn stamp(t: DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Clear-sky GHI from the Haurwitz model.
pub fn clear_sky_ghi(elevation_deg: f64) -> f64 {
    let cz = elevation_deg.to_radians().sin();
    if cz <= 0.0 {
        0.0
    } else {
        1098.0 * cz * (-0.059 / cz).exp()
    }
}

/// Zero-mean AR(1) with the given stationary standard deviation.
struct Ar1 {
    phi: f64,
    innovation: Normal<f64>,
    state: f64,
}

impl Ar1 {
    fn new(phi: f64, std: f64, rng: &mut ChaCha8Rng) -> Self {
        let innovation = Normal::new(0.0, std * (1.0 - phi * phi).sqrt()).expect("finite scale");
        let state = Normal::new(0.0, std).expect("finite scale").sample(rng);
        Self { phi, innovation, state }
    }

    fn step(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        self.state = self.phi * self.state + self.innovation.sample(rng);
        self.state
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

/// Generates the scenario. Cloud, temperature, power noise and forecast
/// noise draw from separate random streams, so changing the forecast
/// parameters leaves observed weather and power untouched.
pub fn generate(scenario: &SyntheticScenario, site: &SiteMeta, seed: u64) -> Result<SyntheticData, PipelineError> {
    scenario.validate()?;
    let s = scenario;
    let hours = s.days * 24;
    let step = Duration::minutes(60 / STEPS_PER_HOUR as i64);
    let elev = |t: DateTime<Utc>| {
        unclamped_elevation(site.latitude, site.longitude, t).map_err(|e| PipelineError::Config(e.to_string()))
    };

    let mut cloud_rng = stream(seed, 1);
    let mut temp_rng = stream(seed, 2);
    let mut power_rng = stream(seed, 3);
    let mut nwp_rng = stream(seed, 4);

    let phi_q = s.cloud_persistence.powf(1.0 / STEPS_PER_HOUR as f64);
    let mut cloud = Ar1::new(phi_q, s.cloud_std, &mut cloud_rng);
    let mut temp_anom = Ar1::new(0.95, s.temp_noise, &mut temp_rng);
    let mut fcst_noise = Ar1::new(s.nwp_noise_persistence, s.nwp_noise, &mut nwp_rng);
    let power_noise = Normal::new(0.0, s.power_noise * site.peak_power).expect("finite scale");
    let temp_fcst_noise = Normal::new(0.0, s.nwp_temp_noise).expect("finite scale");
    let unit = Uniform::new(0.0, 1.0).expect("valid range");

    let mut power = Vec::with_capacity(hours * STEPS_PER_HOUR);
    let mut obs = WeatherTable {
        times: Vec::with_capacity(hours),
        ghi: Vec::with_capacity(hours),
        temp_air: Vec::with_capacity(hours),
    };
    let mut fcst = obs.clone();

    for h in 0..hours {
        let t_hour = s.start + Duration::hours(h as i64);
        let solar_hour = t_hour.hour() as f64 + 0.5 + site.longitude / 15.0;
        let doy = t_hour.ordinal0() as f64;
        let temp = s.temp_mean - s.temp_seasonal_amplitude * (2.0 * PI * (doy + 10.0) / 365.25).cos()
            + s.temp_daily_amplitude * (2.0 * PI * (solar_hour - 14.0) / 24.0).cos()
            + temp_anom.step(&mut temp_rng);

        let mut ghi_sum = 0.0;
        for q in 0..STEPS_PER_HOUR {
            let t = t_hour + step * q as i32;
            let kt = (s.cloud_mean + cloud.step(&mut cloud_rng)).clamp(0.05, 1.15);
            let e = elev(t + step / 2)?;
            let ghi = clear_sky_ghi(e) * kt;
            ghi_sum += ghi;
            let noise = power_noise.sample(&mut power_rng);
            let spike = unit.sample(&mut power_rng) < s.spike_rate;
            let p = if spike {
                10.0 * site.peak_power
            } else if ghi > 0.0 {
                let cell = temp + 0.03 * ghi;
                let derate = 1.0 + s.temp_coefficient * (cell - 25.0);
                (site.peak_power * s.plant_gain * ghi / 1000.0 * derate + noise).max(0.0)
            } else {
                -s.standby * site.peak_power
            };
            power.push((t, p));
        }
        let ghi = ghi_sum / STEPS_PER_HOUR as f64;
        obs.times.push(t_hour);
        obs.ghi.push(ghi);
        obs.temp_air.push(temp);

        let daytime = elev(t_hour + Duration::minutes(30))? > 0.0 || ghi > 0.0;
        let eps = fcst_noise.step(&mut nwp_rng);
        fcst.times.push(t_hour);
        fcst.ghi.push(if daytime { (ghi + s.nwp_bias + eps).max(0.0) } else { 0.0 });
        fcst.temp_air.push(temp + temp_fcst_noise.sample(&mut nwp_rng));
    }
    Ok(SyntheticData {
        power,
        observations: obs,
        forecasts: fcst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn site() -> SiteMeta {
        SiteMeta::new(39.74, -105.18, 2400.0, -7).unwrap()
    }

    fn short() -> SyntheticScenario {
        SyntheticScenario {
            days: 20,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&short(), &site(), 3).unwrap();
        assert_eq!(a, generate(&short(), &site(), 3).unwrap());
        assert_ne!(a.observations.ghi, generate(&short(), &site(), 4).unwrap().observations.ghi);
        assert_eq!(a.power.len(), 20 * 96);
        assert_eq!(a.observations.times.len(), 20 * 24);
    }

    #[test]
    fn forecast_knobs_leave_observations_alone() {
        let a = generate(&short(), &site(), 1).unwrap();
        let noisy = SyntheticScenario {
            nwp_noise: 150.0,
            nwp_bias: 50.0,
            ..short()
        };
        let b = generate(&noisy, &site(), 1).unwrap();
        assert_eq!(a.observations, b.observations);
        assert_eq!(a.power, b.power);
        assert_ne!(a.forecasts, b.forecasts);
    }

    #[test]
    fn zero_noise_zero_bias_forecasts_equal_observations() {
        let s = SyntheticScenario {
            nwp_bias: 0.0,
            nwp_noise: 0.0,
            nwp_temp_noise: 0.0,
            ..short()
        };
        let d = generate(&s, &site(), 9).unwrap();
        assert_eq!(d.forecasts, d.observations);
    }

    #[test]
    fn zero_cloud_variance_gives_power_as_function_of_elevation() {
        let s = SyntheticScenario {
            cloud_std: 0.0,
            power_noise: 0.0,
            spike_rate: 0.0,
            temp_coefficient: 0.0,
            ..short()
        };
        let st = site();
        let a = generate(&s, &st, 1).unwrap();
        let b = generate(&s, &st, 2).unwrap();
        assert_eq!(a.power, b.power);
        for &(t, p) in a.power.iter().step_by(7) {
            let e = unclamped_elevation(st.latitude, st.longitude, t + Duration::minutes(7) + Duration::seconds(30)).unwrap();
            let expect = if e > 0.0 {
                st.peak_power * s.plant_gain * clear_sky_ghi(e) * s.cloud_mean / 1000.0
            } else {
                -s.standby * st.peak_power
            };
            assert!((p - expect).abs() < 1e-9 * st.peak_power, "{t}: {p} vs {expect}");
        }
    }

    #[test]
    fn positive_bias_shows_in_daytime_forecasts() {
        let s = SyntheticScenario {
            nwp_noise: 0.0,
            days: 60,
            ..Default::default()
        };
        let d = generate(&s, &site(), 5).unwrap();
        let day: Vec<f64> = (0..d.forecasts.ghi.len())
            .filter(|&i| d.observations.ghi[i] > 50.0)
            .map(|i| d.forecasts.ghi[i] - d.observations.ghi[i])
            .collect();
        assert!(!day.is_empty());
        assert!(day.iter().all(|&x| (x - 20.0).abs() < 1e-9));
    }

    #[test]
    fn clear_sky_envelope() {
        assert_eq!(clear_sky_ghi(-5.0), 0.0);
        assert!((clear_sky_ghi(90.0) - 1098.0 * (-0.059f64).exp()).abs() < 1e-9);
        assert!(clear_sky_ghi(30.0) < clear_sky_ghi(60.0));
    }

    #[test]
    fn validation() {
        assert!(SyntheticScenario::default().validate().is_ok());
        for bad in [
            SyntheticScenario { days: 0, ..Default::default() },
            SyntheticScenario { cloud_std: -0.1, ..Default::default() },
            SyntheticScenario { cloud_persistence: 1.0, ..Default::default() },
            SyntheticScenario { nwp_noise: f64::NAN, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
