//! Kolmogorov–Smirnov and Cramér–von Mises tests against a fully specified
//! distribution. Fitted parameters are plugged in without correction, so
//! p-values are conservative when the distribution was fitted to `x`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::bessel::ln_bessel_k;
use super::family::DistFamily;
use super::DistError;

/// Smallest sample the tests accept.
pub const MIN_GOF_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub stat: f64,
    pub p: f64,
}

/// `D_n = sup |F_n − F|` from `F(x_(1)) ≤ … ≤ F(x_(n))`.
pub fn ks_statistic(cdf_sorted: &[f64]) -> f64 {
    let n = cdf_sorted.len() as f64;
    cdf_sorted
        .iter()
        .enumerate()
        .map(|(i, &f)| ((i + 1) as f64 / n - f).max(f - i as f64 / n))
        .fold(0.0, f64::max)
}

/// `W² = 1/(12n) + Σ (F(x_(i)) − (2i−1)/(2n))²`.
pub fn cvm_statistic(cdf_sorted: &[f64]) -> f64 {
    let n = cdf_sorted.len() as f64;
    1.0 / (12.0 * n)
        + cdf_sorted
            .iter()
            .enumerate()
            .map(|(i, &f)| (f - (2 * i + 1) as f64 / (2.0 * n)).powi(2))
            .sum::<f64>()
}

/// Survival function of the limiting Kolmogorov distribution.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if !(t > 0.0) {
        return 1.0;
    }
    let p = if t < 1.18 {
        let a = -PI * PI / (8.0 * t * t);
        let mut s = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            s += (a * j * j).exp();
        }
        1.0 - (2.0 * PI).sqrt() / t * s
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * t * t).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        2.0 * s
    };
    p.clamp(0.0, 1.0)
}

/// Limiting CDF of `W²` (Anderson–Darling series in Bessel K_{1/4}).
pub fn cvm_limit_cdf(w2: f64) -> f64 {
    if !(w2 > 0.0) {
        return 0.0;
    }
    let base = -1.5 * PI.ln() - 0.5 * w2.ln();
    let mut total = 0.0;
    for k in 0..10_000 {
        let kf = k as f64;
        let y = 4.0 * kf + 1.0;
        let q = y * y / (16.0 * w2);
        let ln_term =
            base + ln_gamma(kf + 0.5) - ln_gamma(kf + 1.0) + 0.5 * y.ln() - q + ln_bessel_k(0.25, q).unwrap_or(f64::NEG_INFINITY);
        let term = ln_term.exp();
        total += term;
        if k >= 10 && term < 1e-16 {
            break;
        }
    }
    total.clamp(0.0, 1.0)
}

pub fn cvm_sf(w2: f64) -> f64 {
    (1.0 - cvm_limit_cdf(w2)).clamp(0.0, 1.0)
}

fn sorted_cdf(x: &[f64], dist: &DistFamily) -> Result<Vec<f64>, DistError> {
    if x.len() < MIN_GOF_SAMPLES {
        return Err(DistError::TooFewSamples {
            needed: MIN_GOF_SAMPLES,
            got: x.len(),
        });
    }
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    dist.cdf_sorted(&s)
}

pub fn ks_test(x: &[f64], dist: &DistFamily) -> Result<TestResult, DistError> {
    let f = sorted_cdf(x, dist)?;
    let stat = ks_statistic(&f);
    Ok(TestResult {
        stat,
        p: kolmogorov_sf((x.len() as f64).sqrt() * stat),
    })
}

pub fn cvm_test(x: &[f64], dist: &DistFamily) -> Result<TestResult, DistError> {
    let f = sorted_cdf(x, dist)?;
    let stat = cvm_statistic(&f);
    Ok(TestResult { stat, p: cvm_sf(stat) })
}

/// Both tests from a single CDF pass.
pub fn gof_tests(x: &[f64], dist: &DistFamily) -> Result<(TestResult, TestResult), DistError> {
    let f = sorted_cdf(x, dist)?;
    let d = ks_statistic(&f);
    let w2 = cvm_statistic(&f);
    Ok((
        TestResult {
            stat: d,
            p: kolmogorov_sf((x.len() as f64).sqrt() * d),
        },
        TestResult { stat: w2, p: cvm_sf(w2) },
    ))
}
