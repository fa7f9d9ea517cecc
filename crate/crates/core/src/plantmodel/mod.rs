//! Plant characteristic model: a bagged ensemble of ReLU networks mapping
//! power lags, weather forecasts and solar elevation to `f` hourly leads.

mod cv;
mod ensemble;
mod mlp;
mod persist;
mod scaler;
mod train;

use chrono::{DateTime, Utc};
use thiserror::Error;

pub use self::cv::{
    cross_validate, default_search_space, fold_ranges, grid_search, r2_score, write_grid_csv, CvResult, GridCell,
};
pub use self::ensemble::{
    ensemble_train, ensemble_train_xy, windows_to_xy, MemberLog, MlpEnsemble, TrainingLog, MAX_RETRIES,
};
pub use self::mlp::{Gradient, Layer, Mlp, MlpConfig, TrainParams};
pub use self::persist::{load_ensemble, save_ensemble, FORMAT_TAG, FORMAT_VERSION};
pub use self::scaler::MinMaxScaler;
pub use self::train::{train, Dataset, LossTrace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("member {member} failed after {attempts} attempts")]
    MemberFailed { member: usize, attempts: u64 },
    #[error("window issued at {0} has no target")]
    MissingTarget(DateTime<Utc>),
    #[error("R² undefined: truth is constant")]
    UndefinedScore,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("model file: {0}")]
    Persist(String),
}
