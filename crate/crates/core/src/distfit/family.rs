use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use super::bessel::ln_bessel_k;
use super::quad::{integrate, integrate_lower, integrate_upper};
use super::DistError;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// Absolute tolerance of each CDF integral.
const CDF_TOL: f64 = 1e-12;
/// Bisection tolerance for quantiles.
const QUANTILE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistFamily {
    Normal {
        mu: f64,
        sigma: f64,
    },
    StudentT {
        mu: f64,
        sigma: f64,
        nu: f64,
    },
    /// Density proportional to
    /// `(δ² + (x−μ)²)^{(λ−½)/2} K_{λ−½}(α √(δ² + (x−μ)²)) e^{β(x−μ)}`.
    GeneralizedHyperbolic {
        lambda: f64,
        alpha: f64,
        beta: f64,
        delta: f64,
        mu: f64,
    },
}

/// `ln Γ(z + ½) − ln Γ(z) − ½ ln z`.
fn ln_gamma_half_ratio(z: f64) -> f64 {
    if z >= 25.0 {
        let r = 1.0 / z;
        let r2 = r * r;
        r * (-1.0 / 8.0 + r2 * (1.0 / 192.0 + r2 * (-1.0 / 640.0 + r2 * 17.0 / 14336.0)))
    } else {
        ln_gamma(z + 0.5) - ln_gamma(z) - 0.5 * z.ln()
    }
}

impl DistFamily {
    pub fn name(&self) -> &'static str {
        match self {
            DistFamily::Normal { .. } => "normal",
            DistFamily::StudentT { .. } => "student_t",
            DistFamily::GeneralizedHyperbolic { .. } => "generalized_hyperbolic",
        }
    }

    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            DistFamily::Normal { mu, sigma } => vec![("mu", mu), ("sigma", sigma)],
            DistFamily::StudentT { mu, sigma, nu } => vec![("mu", mu), ("sigma", sigma), ("nu", nu)],
            DistFamily::GeneralizedHyperbolic {
                lambda,
                alpha,
                beta,
                delta,
                mu,
            } => vec![
                ("lambda", lambda),
                ("alpha", alpha),
                ("beta", beta),
                ("delta", delta),
                ("mu", mu),
            ],
        }
    }

    pub fn validate(&self) -> Result<(), DistError> {
        let ok = self.params().iter().all(|(_, v)| v.is_finite())
            && match *self {
                DistFamily::Normal { sigma, .. } => sigma > 0.0,
                DistFamily::StudentT { sigma, nu, .. } => sigma > 0.0 && nu > 0.0,
                DistFamily::GeneralizedHyperbolic {
                    alpha, beta, delta, ..
                } => delta > 0.0 && alpha > 0.0 && beta.abs() < alpha,
            };
        if ok {
            Ok(())
        } else {
            Err(DistError::InvalidParameters(format!("{self:?}")))
        }
    }

    /// Density with its normalizing constant evaluated once.
    pub fn density(&self) -> Result<Density, DistError> {
        self.validate()?;
        Ok(match *self {
            DistFamily::Normal { mu, sigma } => Density {
                family: *self,
                center: mu,
                scale: sigma,
                ln_c: -LN_SQRT_2PI - sigma.ln(),
            },
            DistFamily::StudentT { mu, sigma, nu } => {
                let z = 0.5 * nu;
                // ln Γ((ν+1)/2) − ln Γ(ν/2) − ½ ln(νπ) with the large-ν part folded in
                let ln_c = ln_gamma_half_ratio(z) - 0.5 * (LN_2 + PI.ln()) - sigma.ln();
                Density {
                    family: *self,
                    center: mu,
                    scale: sigma,
                    ln_c,
                }
            }
            DistFamily::GeneralizedHyperbolic {
                lambda,
                alpha,
                beta,
                delta,
                mu,
            } => {
                let gamma = ((alpha - beta) * (alpha + beta)).sqrt();
                let ln_c = lambda * (gamma / delta).ln() - LN_SQRT_2PI - (lambda - 0.5) * alpha.ln()
                    - ln_bessel_k(lambda, delta * gamma)?;
                if !ln_c.is_finite() {
                    return Err(DistError::InvalidParameters(format!("normalizer overflows for {self:?}")));
                }
                Density {
                    family: *self,
                    center: mu,
                    scale: delta.max(1.0 / alpha),
                    ln_c,
                }
            }
        })
    }

    pub fn ln_pdf(&self, x: f64) -> Result<f64, DistError> {
        Ok(self.density()?.ln_pdf(x))
    }

    pub fn pdf(&self, x: f64) -> Result<f64, DistError> {
        Ok(self.density()?.pdf(x))
    }

    pub fn log_likelihood(&self, x: &[f64]) -> Result<f64, DistError> {
        let d = self.density()?;
        Ok(x.iter().map(|&v| d.ln_pdf(v)).sum())
    }

    pub fn cdf(&self, x: f64) -> Result<f64, DistError> {
        self.density()?.cdf(x)
    }

    /// CDF at ascending points. Integrates between neighbours instead of
    /// from the tails each time.
    pub fn cdf_sorted(&self, xs: &[f64]) -> Result<Vec<f64>, DistError> {
        self.density()?.cdf_sorted(xs)
    }

    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        self.density()?.quantile(p)
    }
}

/// A validated [`DistFamily`] with its log normalizing constant.
#[derive(Debug, Clone, Copy)]
pub struct Density {
    family: DistFamily,
    center: f64,
    scale: f64,
    ln_c: f64,
}

impl Density {
    pub fn family(&self) -> DistFamily {
        self.family
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self.family {
            DistFamily::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                self.ln_c - 0.5 * z * z
            }
            DistFamily::StudentT { mu, sigma, nu } => {
                let z = (x - mu) / sigma;
                self.ln_c - 0.5 * (nu + 1.0) * (z * z / nu).ln_1p()
            }
            DistFamily::GeneralizedHyperbolic {
                lambda,
                alpha,
                beta,
                delta,
                mu,
            } => {
                let d = x - mu;
                let q = delta.hypot(d);
                let k = ln_bessel_k(lambda - 0.5, alpha * q).unwrap_or(f64::NAN);
                self.ln_c + (lambda - 0.5) * q.ln() + k + beta * d
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    fn lower_tail(&self, x: f64) -> Result<f64, DistError> {
        integrate_lower(|v| self.pdf(v), x, self.scale, CDF_TOL)
    }

    fn upper_tail(&self, x: f64) -> Result<f64, DistError> {
        integrate_upper(|v| self.pdf(v), x, self.scale, CDF_TOL)
    }

    fn segment(&self, a: f64, b: f64) -> Result<f64, DistError> {
        integrate(|v| self.pdf(v), a, b, CDF_TOL)
    }

    pub fn cdf(&self, x: f64) -> Result<f64, DistError> {
        if x.is_nan() {
            return Err(DistError::InvalidArgument("CDF at NaN".into()));
        }
        if x == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        if x == f64::INFINITY {
            return Ok(1.0);
        }
        if let DistFamily::Normal { mu, sigma } = self.family {
            return Ok(0.5 * erfc(-(x - mu) / (sigma * std::f64::consts::SQRT_2)));
        }
        let p = if x <= self.center {
            self.lower_tail(x)?
        } else {
            1.0 - self.upper_tail(x)?
        };
        Ok(p.clamp(0.0, 1.0))
    }

    pub fn cdf_sorted(&self, xs: &[f64]) -> Result<Vec<f64>, DistError> {
        if xs.iter().any(|v| !v.is_finite()) {
            return Err(DistError::InvalidArgument("CDF at a non-finite point".into()));
        }
        if xs.windows(2).any(|w| w[1] < w[0]) {
            return Err(DistError::InvalidArgument("points must be sorted ascending".into()));
        }
        if matches!(self.family, DistFamily::Normal { .. }) {
            return xs.iter().map(|&x| self.cdf(x)).collect();
        }
        let split = xs.partition_point(|&x| x <= self.center);
        let mut out = vec![0.0; xs.len()];
        let mut acc = 0.0;
        for i in 0..split {
            acc += if i == 0 {
                self.lower_tail(xs[0])?
            } else {
                self.segment(xs[i - 1], xs[i])?
            };
            out[i] = acc;
        }
        let mut tail = 0.0;
        for i in (split..xs.len()).rev() {
            tail += if i + 1 == xs.len() {
                self.upper_tail(xs[i])?
            } else {
                self.segment(xs[i], xs[i + 1])?
            };
            out[i] = 1.0 - tail;
        }
        let mut prev = 0.0;
        for v in &mut out {
            *v = v.clamp(prev, 1.0);
            prev = *v;
        }
        Ok(out)
    }

    /// Inverse CDF by bisection and two Newton steps.
    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DistError::InvalidArgument(format!("quantile level {p} outside (0, 1)")));
        }
        let mut width = self.scale;
        let (mut lo, mut hi) = (self.center - width, self.center + width);
        while self.cdf(lo)? > p {
            width *= 2.0;
            lo = self.center - width;
            if !lo.is_finite() {
                return Err(DistError::Integration(format!("cannot bracket quantile {p}")));
            }
        }
        while self.cdf(hi)? < p {
            width *= 2.0;
            hi = self.center + width;
            if !hi.is_finite() {
                return Err(DistError::Integration(format!("cannot bracket quantile {p}")));
            }
        }
        while hi - lo > QUANTILE_TOL * hi.abs().max(lo.abs()).max(1.0) {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid)? < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Polish past the bisection tolerance.
        let mut x = 0.5 * (lo + hi);
        for _ in 0..2 {
            let next = x - (self.cdf(x)? - p) / self.pdf(x);
            if !(next.is_finite() && (lo - (hi - lo)..=hi + (hi - lo)).contains(&next)) {
                break;
            }
            x = next;
        }
        Ok(x)
    }

    /// Quantiles at ascending levels. After the first level each quantile is
    /// found by safeguarded Newton steps from its predecessor, integrating the
    /// density only over the gap between them.
    pub fn quantiles_sorted(&self, ps: &[f64]) -> Result<Vec<f64>, DistError> {
        if ps.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(DistError::InvalidArgument("quantile levels must lie in (0, 1)".into()));
        }
        if ps.windows(2).any(|w| w[1] < w[0]) {
            return Err(DistError::InvalidArgument("quantile levels must be ascending".into()));
        }
        let Some(&first) = ps.first() else { return Ok(Vec::new()) };
        let mut x0 = self.quantile(first)?;
        let mut f0 = self.cdf(x0)?;
        let mut out = Vec::with_capacity(ps.len());
        for &p in ps {
            if p <= f0 {
                out.push(x0);
                continue;
            }
            // Bracket [lo, hi] with F(lo) < p <= F(hi).
            let (mut lo, mut flo) = (x0, f0);
            let guess = (p - f0) / self.pdf(x0);
            let mut step = if guess.is_finite() && guess > 0.0 {
                (1.5 * guess).clamp(1e-6 * self.scale, self.scale)
            } else {
                self.scale
            };
            let (mut hi, mut fhi);
            loop {
                hi = lo + step;
                fhi = flo + self.segment(lo, hi)?;
                if fhi >= p {
                    break;
                }
                (lo, flo) = (hi, fhi);
                step *= 2.0;
                if !hi.is_finite() {
                    return Err(DistError::Integration(format!("cannot bracket quantile {p}")));
                }
            }
            let (base, fbase) = (lo, flo);
            let mut x = lo + (p - flo) / (fhi - flo) * (hi - lo);
            for _ in 0..100 {
                let fx = fbase + self.segment(base, x)?;
                if fx < p {
                    lo = x;
                } else {
                    hi = x;
                }
                if (fx - p).abs() <= 1e-14 || hi - lo <= QUANTILE_TOL * hi.abs().max(lo.abs()).max(1.0) {
                    break;
                }
                let newton = x - (fx - p) / self.pdf(x);
                x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            }
            x0 = x;
            f0 = fbase + self.segment(base, x)?;
            out.push(x);
        }
        Ok(out)
    }
}
