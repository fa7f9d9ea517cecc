use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::family::DistFamily;
use super::gof::{gof_tests, TestResult, MIN_GOF_SAMPLES};
use super::simplex::{nelder_mead, SimplexOptions};
use super::DistError;

/// Parameters below this multiple of the sample scale count as a collapsed fit.
const COLLAPSE: f64 = 1e-8;
/// Hard floor the optimizers may not cross.
const FLOOR: f64 = 1e-10;
const MAX_LAMBDA: f64 = 20.0;
const NU_MIN: f64 = 0.05;
/// Above this the t density is numerically the normal density.
const NU_MAX: f64 = 1e12;
const SIMPLEX_FTOL: f64 = 1e-8;
const T_STARTS: [f64; 5] = [2.0, 5.0, 10.0, 30.0, 100.0];

/// Sample moments with plain (non-excess) kurtosis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: f64,
    /// Divisor `n − 1`.
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Moments {
    Summary(MomentSummary),
    /// Zero variance.
    Degenerate { mean: f64, n: usize },
}

fn check_sample(x: &[f64], needed: usize) -> Result<(), DistError> {
    if x.len() < needed {
        return Err(DistError::TooFewSamples { needed, got: x.len() });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(DistError::InvalidArgument("sample contains non-finite values".into()));
    }
    Ok(())
}

pub fn moments(x: &[f64]) -> Result<Moments, DistError> {
    check_sample(x, 4)?;
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    if m2 == 0.0 {
        return Ok(Moments::Degenerate { mean, n: x.len() });
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    Ok(Moments::Summary(MomentSummary {
        mean,
        std: (m2 * n / (n - 1.0)).sqrt(),
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
        n: x.len(),
    }))
}

fn summary(x: &[f64]) -> Result<MomentSummary, DistError> {
    match moments(x)? {
        Moments::Summary(s) => Ok(s),
        Moments::Degenerate { .. } => Err(DistError::Degenerate),
    }
}

fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// A maximum-likelihood fit. A fit that failed to converge keeps its last
/// parameters but carries no goodness-of-fit results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedDistribution {
    pub family: DistFamily,
    pub log_likelihood: f64,
    pub converged: bool,
    pub ks: Option<TestResult>,
    pub cvm: Option<TestResult>,
    pub n: usize,
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

impl FittedDistribution {
    fn finish(family: DistFamily, x: &[f64], converged: bool) -> Self {
        let log_likelihood = family.log_likelihood(x).unwrap_or(f64::NAN);
        let converged = converged && log_likelihood.is_finite();
        let (ks, cvm) = if converged && x.len() >= MIN_GOF_SAMPLES {
            match gof_tests(x, &family) {
                Ok((k, c)) => (Some(k), Some(c)),
                Err(e) => {
                    log::warn!("{} goodness of fit failed: {e}", family.name());
                    (None, None)
                }
            }
        } else {
            (None, None)
        };
        Self {
            family,
            log_likelihood,
            converged,
            ks,
            cvm,
            n: x.len(),
        }
    }

    /// `{family, params{…}, loglik, converged, ks:{stat,p}, cvm:{stat,p}, n}`;
    /// missing or non-finite values are `null`.
    pub fn to_json(&self) -> Value {
        let params: Map<String, Value> = self
            .family
            .params()
            .into_iter()
            .map(|(k, v)| (k.to_string(), finite_or_null(v)))
            .collect();
        let test = |t: Option<TestResult>| match t {
            Some(t) => json!({"stat": finite_or_null(t.stat), "p": finite_or_null(t.p)}),
            None => Value::Null,
        };
        json!({
            "family": self.family.name(),
            "params": params,
            "loglik": finite_or_null(self.log_likelihood),
            "converged": self.converged,
            "ks": test(self.ks),
            "cvm": test(self.cvm),
            "n": self.n,
        })
    }
}

pub fn fit_normal(x: &[f64]) -> Result<FittedDistribution, DistError> {
    check_sample(x, 4)?;
    let s = summary(x)?;
    let n = x.len() as f64;
    let sigma = s.std * ((n - 1.0) / n).sqrt();
    Ok(FittedDistribution::finish(DistFamily::Normal { mu: s.mean, sigma }, x, true))
}

fn t_from(theta: &[f64]) -> DistFamily {
    DistFamily::StudentT {
        mu: theta[0],
        sigma: theta[1].exp(),
        nu: theta[2].exp().clamp(NU_MIN, NU_MAX),
    }
}

fn neg_loglik(family: DistFamily, x: &[f64]) -> f64 {
    match family.density() {
        Ok(d) => -x.iter().map(|&v| d.ln_pdf(v)).sum::<f64>(),
        Err(_) => f64::INFINITY,
    }
}

fn simplex_opts(dim: usize, max_evals: usize) -> SimplexOptions {
    SimplexOptions {
        step: vec![0.3; dim],
        ftol: SIMPLEX_FTOL,
        max_evals,
        restarts: 1,
    }
}

/// Location–scale Student t by simplex search over `(μ, ln σ, ln ν)` from
/// five starting degrees of freedom.
pub fn fit_student_t(x: &[f64]) -> Result<FittedDistribution, DistError> {
    check_sample(x, 8)?;
    let s = summary(x)?;
    let floor = FLOOR * s.std;
    let objective = |theta: &[f64]| {
        if theta[1].exp() < floor {
            return f64::INFINITY;
        }
        neg_loglik(t_from(theta), x)
    };
    let mu0 = median(x);
    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    for nu in T_STARTS {
        let sigma0 = s.std * ((nu - 2.0).max(0.5) / nu).sqrt();
        let mut opts = simplex_opts(3, 2000);
        opts.step[0] = 0.3 * s.std;
        let r = nelder_mead(objective, &[mu0, sigma0.ln(), nu.ln()], &opts);
        if best.as_ref().is_none_or(|b| r.f < b.0) {
            best = Some((r.f, r.x, r.converged));
        }
    }
    let (f, theta, converged) = best.expect("at least one start");
    let mut family = t_from(&theta);
    let mut converged = converged && f.is_finite();

    // The normal is the ν → ∞ member; never report a worse fit than that limit.
    let normal = fit_normal(x)?;
    if let DistFamily::Normal { mu, sigma } = normal.family {
        let limit = DistFamily::StudentT { mu, sigma, nu: NU_MAX };
        if neg_loglik(limit, x) < f {
            family = limit;
            converged = true;
        }
    }
    if let DistFamily::StudentT { sigma, .. } = family {
        if sigma < COLLAPSE * s.std {
            converged = false;
        }
    }
    Ok(FittedDistribution::finish(family, x, converged))
}

fn gh_from(theta: &[f64]) -> DistFamily {
    let beta = theta[2];
    DistFamily::GeneralizedHyperbolic {
        lambda: theta[0],
        alpha: theta[1].exp() + beta.abs(),
        beta,
        delta: theta[3].exp(),
        mu: theta[4],
    }
}

fn gh_theta(lambda: f64, alpha: f64, beta: f64, delta: f64, mu: f64) -> Vec<f64> {
    vec![lambda, (alpha - beta.abs()).ln(), beta, delta.ln(), mu]
}

/// Generalized hyperbolic MLE over `(λ, ln(α − |β|), β, ln δ, μ)`.
///
/// Starts: normal-inverse-Gaussian moment matching, the same shape with
/// `λ = 1`, and a Student-t-like member derived from [`fit_student_t`].
/// A fit whose `δ` collapses towards zero (a point mass) is reported with
/// `converged = false`.
pub fn fit_generalized_hyperbolic(x: &[f64]) -> Result<FittedDistribution, DistError> {
    check_sample(x, 16)?;
    let s = summary(x)?;
    let var = s.std * s.std;
    let floor = FLOOR * s.std;

    let excess = (s.kurtosis - 3.0).max(0.3);
    let delta0 = (3.0 * var / excess).sqrt();
    let alpha0 = (3.0 / (excess * var)).sqrt();
    let beta0 = (s.skewness * alpha0 * (delta0 * alpha0).sqrt() / 3.0).clamp(-0.5 * alpha0, 0.5 * alpha0);
    let gamma0 = (alpha0 * alpha0 - beta0 * beta0).sqrt();
    let mu0 = s.mean - delta0 * beta0 / gamma0;

    let mut starts = vec![
        gh_theta(-0.5, alpha0, beta0, delta0, mu0),
        gh_theta(1.0, alpha0, beta0, delta0, mu0),
    ];
    let t = fit_student_t(x)?;
    if let DistFamily::StudentT { mu, sigma, nu } = t.family {
        if t.converged && nu < 2.0 * MAX_LAMBDA {
            starts.push(gh_theta(-0.5 * nu, 0.05 / sigma, 0.0, sigma * nu.sqrt(), mu));
        }
    }

    let objective = |theta: &[f64]| {
        if theta[0].abs() > MAX_LAMBDA || theta[3].exp() < floor {
            return f64::INFINITY;
        }
        neg_loglik(gh_from(theta), x)
    };
    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    for start in starts {
        let mut opts = simplex_opts(5, 1500);
        opts.step[2] = 0.2 * alpha0;
        opts.step[4] = 0.3 * s.std;
        let r = nelder_mead(objective, &start, &opts);
        if best.as_ref().is_none_or(|b| r.f < b.0) {
            best = Some((r.f, r.x, r.converged));
        }
    }
    let (f, theta, converged) = best.expect("at least one start");
    let family = gh_from(&theta);
    let collapsed = matches!(family, DistFamily::GeneralizedHyperbolic { delta, .. } if delta < COLLAPSE * s.std);
    Ok(FittedDistribution::finish(family, x, converged && f.is_finite() && !collapsed))
}
