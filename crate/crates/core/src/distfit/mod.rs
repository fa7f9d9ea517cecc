//! Maximum-likelihood fits of normal, Student t and generalized hyperbolic
//! distributions, Kolmogorov–Smirnov and Cramér–von Mises tests, and Q–Q data.

mod bessel;
mod family;
mod fit;
mod gof;
mod qq;
mod quad;
mod simplex;

use thiserror::Error;

pub use self::bessel::{bessel_k, bessel_k_scaled, ln_bessel_k};
pub use self::family::{Density, DistFamily};
pub use self::fit::{
    fit_generalized_hyperbolic, fit_normal, fit_student_t, moments, FittedDistribution, MomentSummary, Moments,
};
pub use self::gof::{
    cvm_limit_cdf, cvm_sf, cvm_statistic, cvm_test, gof_tests, kolmogorov_sf, ks_statistic, ks_test, TestResult,
    MIN_GOF_SAMPLES,
};
pub use self::qq::qq_points;
pub use self::quad::{integrate, integrate_lower, integrate_upper};
pub use self::simplex::{nelder_mead, SimplexOptions, SimplexResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid distribution parameters: {0}")]
    InvalidParameters(String),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sample has zero variance")]
    Degenerate,
    #[error("numerical integration failed: {0}")]
    Integration(String),
}
