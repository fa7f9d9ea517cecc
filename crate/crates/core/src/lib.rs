//! Two-stage PV power forecasting: a data-driven plant model fed by
//! black-box weather forecasts, and lead-wise characterization of the
//! resulting forecast errors.

pub mod distfit;
pub mod erroranalysis;
pub mod features;
pub mod ingest;
pub mod pipeline;
pub mod plantmodel;
pub mod solarpos;
