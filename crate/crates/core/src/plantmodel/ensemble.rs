use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, MlpConfig};
use super::scaler::MinMaxScaler;
use super::train::{train, Dataset};
use super::ModelError;
use crate::ingest::SampleWindow;

/// Fresh-seed retries allowed per diverging member.
pub const MAX_RETRIES: u64 = 3;

/// Identically configured networks sharing one input scaler. The prediction
/// is the element-wise mean of the member outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpEnsemble {
    config: MlpConfig,
    scaler: MinMaxScaler,
    members: Vec<Mlp>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberLog {
    pub index: usize,
    /// Seed of the attempt that succeeded.
    pub seed: u64,
    pub attempts: u64,
    pub best_epoch: Option<usize>,
    pub train_loss: Vec<f64>,
    pub valid_loss: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub members: Vec<MemberLog>,
}

impl MlpEnsemble {
    pub fn new(config: MlpConfig, scaler: MinMaxScaler, members: Vec<Mlp>) -> Result<Self, ModelError> {
        config.validate()?;
        if members.is_empty() {
            return Err(ModelError::InvalidConfig("ensemble needs at least one member".into()));
        }
        if scaler.dim() != config.input_dim {
            return Err(ModelError::Shape {
                expected: config.input_dim,
                got: scaler.dim(),
            });
        }
        let widths = config.widths();
        for (i, m) in members.iter().enumerate() {
            let mut w: Vec<usize> = m.layers().iter().map(|l| l.n_in).collect();
            w.push(m.output_dim());
            if w != widths {
                return Err(ModelError::InvalidConfig(format!(
                    "member {i} has widths {w:?}, config says {widths:?}"
                )));
            }
        }
        Ok(Self {
            config,
            scaler,
            members,
        })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn scaler(&self) -> &MinMaxScaler {
        &self.scaler
    }

    pub fn members(&self) -> &[Mlp] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Outputs of every member for unscaled input features.
    pub fn member_predictions(&self, features: &[f64]) -> Result<Vec<Vec<f64>>, ModelError> {
        let x = self.scaler.transform(features)?;
        Ok(self.members.iter().map(|m| m.forward_unchecked(&x)).collect())
    }

    /// Element-wise mean of member outputs. Not clipped.
    pub fn predict(&self, features: &[f64]) -> Result<Vec<f64>, ModelError> {
        let outputs = self.member_predictions(features)?;
        let m = outputs.len() as f64;
        let mut mean = vec![0.0; self.config.output_dim];
        for out in &outputs {
            mean.iter_mut().zip(out).for_each(|(a, v)| *a += v);
        }
        mean.iter_mut().for_each(|v| *v /= m);
        Ok(mean)
    }

    /// Predicts one window; applies the night filter when the config enables it.
    pub fn predict_window(&self, window: &SampleWindow) -> Result<Vec<f64>, ModelError> {
        let mut p = self.predict(&window.features())?;
        if self.config.night_filter {
            for (v, s) in p.iter_mut().zip(&window.elevation) {
                if *s <= 0.0 {
                    *v = 0.0;
                }
            }
        }
        Ok(p)
    }
}

/// Inputs and targets of training windows.
pub fn windows_to_xy(samples: &[SampleWindow]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), ModelError> {
    samples
        .iter()
        .map(|w| {
            let y = w.target.clone().ok_or(ModelError::MissingTarget(w.issue_time))?;
            Ok((w.features(), y))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(|v| v.into_iter().unzip())
}

pub fn ensemble_train(
    config: &MlpConfig,
    m: usize,
    samples: &[SampleWindow],
) -> Result<(MlpEnsemble, TrainingLog), ModelError> {
    let (x, y) = windows_to_xy(samples)?;
    ensemble_train_xy(config, m, &x, &y)
}

/// Trains `m` members with seeds `config.seed + j`. The scaler is fitted once
/// on all training inputs; the trailing `validation_fraction` of rows drives
/// early stopping. Members are independent and trained in parallel.
pub fn ensemble_train_xy(
    config: &MlpConfig,
    m: usize,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
) -> Result<(MlpEnsemble, TrainingLog), ModelError> {
    config.validate()?;
    if m == 0 {
        return Err(ModelError::InvalidConfig("ensemble size must be at least 1".into()));
    }
    if inputs.len() != targets.len() {
        return Err(ModelError::Shape {
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    let scaler = MinMaxScaler::fit(inputs)?;
    let scaled = inputs
        .iter()
        .map(|x| scaler.transform(x))
        .collect::<Result<Vec<_>, _>>()?;
    let data = Dataset::new(scaled, targets.to_vec());
    let (tr, va) = data.split_tail(config.train.validation_fraction);

    let results: Vec<Result<(Mlp, MemberLog), ModelError>> = (0..m)
        .into_par_iter()
        .map(|j| train_member(config, &tr, &va, j, m))
        .collect();
    let mut members = Vec::with_capacity(m);
    let mut log = TrainingLog::default();
    for r in results {
        let (net, entry) = r?;
        members.push(net);
        log.members.push(entry);
    }
    Ok((MlpEnsemble::new(config.clone(), scaler, members)?, log))
}

fn train_member(
    config: &MlpConfig,
    tr: &Dataset,
    va: &Dataset,
    index: usize,
    m: usize,
) -> Result<(Mlp, MemberLog), ModelError> {
    for attempt in 0..=MAX_RETRIES {
        let seed = config
            .seed
            .wrapping_add(index as u64)
            .wrapping_add(attempt * m as u64);
        let net = Mlp::new(config, seed)?;
        match train(net, tr, va, &config.train, seed) {
            Ok((net, trace)) => {
                return Ok((
                    net,
                    MemberLog {
                        index,
                        seed,
                        attempts: attempt + 1,
                        best_epoch: trace.best_epoch,
                        train_loss: trace.train,
                        valid_loss: trace.valid,
                    },
                ))
            }
            Err(ModelError::Diverged { epoch, loss }) => {
                log::warn!("member {index} diverged at epoch {epoch} (loss {loss}), seed {seed}");
            }
            Err(e) => return Err(e),
        }
    }
    Err(ModelError::MemberFailed {
        member: index,
        attempts: MAX_RETRIES + 1,
    })
}
