//! Independent oracles and data generators shared by the integration tests.
//! Nothing here calls into the code under test except for plain data types.

#![allow(dead_code)]

use chrono::{DateTime, Datelike, Timelike, Utc};
use rand::Rng;
use rand_distr::{Distribution, InverseGaussian, StandardNormal};

/// Geometric solar elevation (degrees, no refraction) from the NOAA solar
/// calculator equations (Meeus-based, Julian centuries since J2000).
pub fn noaa_elevation(lat: f64, lon: f64, t: DateTime<Utc>) -> f64 {
    let secs = t.timestamp() as f64 + t.timestamp_subsec_nanos() as f64 * 1e-9;
    let jd = secs / 86_400.0 + 2_440_587.5;
    let jc = (jd - 2_451_545.0) / 36_525.0;

    let l0 = (280.46646 + jc * (36000.76983 + jc * 0.0003032)).rem_euclid(360.0);
    let m = 357.52911 + jc * (35999.05029 - 0.0001537 * jc);
    let e = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc);
    let mr = m.to_radians();
    let c = mr.sin() * (1.914602 - jc * (0.004817 + 0.000014 * jc))
        + (2.0 * mr).sin() * (0.019993 - 0.000101 * jc)
        + (3.0 * mr).sin() * 0.000289;
    let true_long = l0 + c;
    let omega = (125.04 - 1934.136 * jc).to_radians();
    let app_long = true_long - 0.00569 - 0.00478 * omega.sin();
    let mean_obliq = 23.0 + (26.0 + (21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813))) / 60.0) / 60.0;
    let obliq = (mean_obliq + 0.00256 * omega.cos()).to_radians();
    let decl = (obliq.sin() * app_long.to_radians().sin()).asin();

    let y = (obliq / 2.0).tan().powi(2);
    let l0r = l0.to_radians();
    let eot = 4.0
        * (y * (2.0 * l0r).sin() - 2.0 * e * mr.sin() + 4.0 * e * y * mr.sin() * (2.0 * l0r).cos()
            - 0.5 * y * y * (4.0 * l0r).sin()
            - 1.25 * e * e * (2.0 * mr).sin())
        .to_degrees();

    let minutes = t.hour() as f64 * 60.0 + t.minute() as f64 + t.second() as f64 / 60.0;
    let tst = (minutes + eot + 4.0 * lon).rem_euclid(1440.0);
    let ha = if tst / 4.0 < 0.0 { tst / 4.0 + 180.0 } else { tst / 4.0 - 180.0 };
    let phi = lat.to_radians();
    let cos_zen = phi.sin() * decl.sin() + phi.cos() * decl.cos() * ha.to_radians().cos();
    90.0 - cos_zen.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Day of year helper for readable test output.
pub fn doy(t: DateTime<Utc>) -> u32 {
    t.ordinal()
}

/// Mean over runs (with at least one valid lead) of the mean over valid
/// leads of `g(p − y)`.
pub fn bf_double_mean(runs: &[(Vec<f64>, Vec<f64>, Vec<bool>)], g: impl Fn(f64) -> f64) -> Option<f64> {
    let mut per_run = Vec::new();
    for (p, y, v) in runs {
        let mut sum = 0.0;
        let mut k = 0;
        for i in 0..p.len() {
            if v[i] {
                sum += g(p[i] - y[i]);
                k += 1;
            }
        }
        if k > 0 {
            per_run.push(sum / k as f64);
        }
    }
    if per_run.is_empty() {
        None
    } else {
        Some(per_run.iter().sum::<f64>() / per_run.len() as f64)
    }
}

pub fn bf_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Average ranks by counting: 1 + #smaller + (#equal − 1)/2.
pub fn bf_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&a| {
            let less = x.iter().filter(|&&b| b < a).count() as f64;
            let equal = x.iter().filter(|&&b| b == a).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn bf_spearman(x: &[f64], y: &[f64]) -> f64 {
    bf_pearson(&bf_ranks(x), &bf_ranks(y))
}

/// `sup |F_n − F|` with the empirical CDF evaluated by counting on both
/// sides of every jump. `u[i] = F(x[i])`, any order.
pub fn bf_ks(x: &[f64], u: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for i in 0..x.len() {
        let at = x.iter().filter(|&&b| b <= x[i]).count() as f64 / n;
        let before = x.iter().filter(|&&b| b < x[i]).count() as f64 / n;
        d = d.max((at - u[i]).abs()).max((before - u[i]).abs());
    }
    d
}

/// `n ∫₀¹ (F_n − u)² du` integrated exactly over the pieces where the
/// empirical CDF (in probability space) is constant.
pub fn bf_cvm(u: &[f64]) -> f64 {
    let mut s = u.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let nf = n as f64;
    let piece = |level: f64, a: f64, b: f64| ((level - a).powi(3) - (level - b).powi(3)) / 3.0;
    let mut total = piece(0.0, 0.0, s[0]);
    for k in 1..n {
        total += piece(k as f64 / nf, s[k - 1], s[k]);
    }
    total += piece(1.0, s[n - 1], 1.0);
    nf * total
}

/// Normal-inverse-Gaussian draws via the normal variance–mean mixture
/// `μ + βW + √W·Z`, `W ~ IG(δ/γ, δ²)`, `γ = √(α² − β²)`.
pub fn nig_sample<R: Rng>(rng: &mut R, n: usize, alpha: f64, beta: f64, delta: f64, mu: f64) -> Vec<f64> {
    let gamma = (alpha * alpha - beta * beta).sqrt();
    let ig = InverseGaussian::new(delta / gamma, delta * delta).unwrap();
    (0..n)
        .map(|_| {
            let w: f64 = ig.sample(rng);
            let z: f64 = StandardNormal.sample(rng);
            mu + beta * w + w.sqrt() * z
        })
        .collect()
}

/// Location–scale Student t draws: `μ + σ Z / √(χ²_ν / ν)`.
pub fn t_sample<R: Rng>(rng: &mut R, n: usize, nu: f64, mu: f64, sigma: f64) -> Vec<f64> {
    let chi = rand_distr::ChiSquared::new(nu).unwrap();
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            let c: f64 = chi.sample(rng);
            mu + sigma * z / (c / nu).sqrt()
        })
        .collect()
}

/// Rows of AR(1) errors across `leads` with lag-1 correlation `rho` and
/// unit marginal variance.
pub fn ar1_rows<R: Rng>(rng: &mut R, runs: usize, leads: usize, rho: f64) -> Vec<Vec<f64>> {
    let innov = (1.0 - rho * rho).sqrt();
    (0..runs)
        .map(|_| {
            let mut e: f64 = StandardNormal.sample(rng);
            let mut row = Vec::with_capacity(leads);
            row.push(e);
            for _ in 1..leads {
                let z: f64 = StandardNormal.sample(rng);
                e = rho * e + innov * z;
                row.push(e);
            }
            row
        })
        .collect()
}

/// Minimal pipeline config text for the Golden, Colorado test site.
pub fn site_config(seed: u64, extra: &str) -> String {
    format!(
        "seed = {seed}\n[site]\nlatitude = 39.74\nlongitude = -105.18\npeak_power_w = 2400.0\nutc_offset = -7\n{extra}\n"
    )
}
