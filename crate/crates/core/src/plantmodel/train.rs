use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Gradient, Layer, Mlp, TrainParams};
use super::ModelError;

/// Scaled inputs paired with targets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Self {
        assert_eq!(inputs.len(), targets.len(), "inputs and targets differ in length");
        Self { inputs, targets }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Splits off the trailing `fraction` of rows (at least one row when
    /// `fraction > 0` and the set has two or more rows).
    pub fn split_tail(&self, fraction: f64) -> (Dataset, Dataset) {
        let n = self.len();
        let mut k = (n as f64 * fraction).round() as usize;
        if fraction > 0.0 && n >= 2 {
            k = k.clamp(1, n - 1);
        } else {
            k = 0;
        }
        let cut = n - k;
        (
            Dataset::new(self.inputs[..cut].to_vec(), self.targets[..cut].to_vec()),
            Dataset::new(self.inputs[cut..].to_vec(), self.targets[cut..].to_vec()),
        )
    }
}

/// Per-epoch losses. `valid` is empty when no validation set was given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub train: Vec<f64>,
    pub valid: Vec<f64>,
    /// Epoch (0-based) whose weights were kept; `None` if no epoch ran.
    pub best_epoch: Option<usize>,
}

struct Adam {
    m: Gradient,
    v: Gradient,
    step: i32,
}

impl Adam {
    fn new(net: &Mlp) -> Self {
        let zeros = Gradient {
            layers: net.layers().iter().map(|l| Layer::zeros(l.n_in, l.n_out)).collect(),
        };
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    fn update(&mut self, net: &mut Mlp, grad: &Gradient, p: &TrainParams) {
        self.step += 1;
        let c1 = 1.0 - p.beta1.powi(self.step);
        let c2 = 1.0 - p.beta2.powi(self.step);
        let lr = p.learning_rate;
        let apply = |w: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for (((w, g), m), v) in w.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = p.beta1 * *m + (1.0 - p.beta1) * g;
                *v = p.beta2 * *v + (1.0 - p.beta2) * g * g;
                *w -= lr * (*m / c1) / ((*v / c2).sqrt() + p.epsilon);
            }
        };
        for (((layer, g), m), v) in net
            .layers_mut()
            .iter_mut()
            .zip(&grad.layers)
            .zip(&mut self.m.layers)
            .zip(&mut self.v.layers)
        {
            apply(&mut layer.weights, &g.weights, &mut m.weights, &mut v.weights);
            apply(&mut layer.biases, &g.biases, &mut m.biases, &mut v.biases);
        }
    }
}

/// Mini-batch Adam on MSE with per-epoch shuffling from `seed`.
///
/// With a non-empty `valid` set, training stops after `patience` epochs
/// without validation improvement and the best weights are returned.
pub fn train(
    mut net: Mlp,
    train: &Dataset,
    valid: &Dataset,
    params: &TrainParams,
    seed: u64,
) -> Result<(Mlp, LossTrace), ModelError> {
    if train.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    for x in train.inputs.iter().chain(&valid.inputs) {
        if x.len() != net.input_dim() {
            return Err(ModelError::Shape {
                expected: net.input_dim(),
                got: x.len(),
            });
        }
    }
    for y in train.targets.iter().chain(&valid.targets) {
        if y.len() != net.output_dim() {
            return Err(ModelError::Shape {
                expected: net.output_dim(),
                got: y.len(),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adam = Adam::new(&net);
    let mut grad = Gradient {
        layers: net.layers().iter().map(|l| Layer::zeros(l.n_in, l.n_out)).collect(),
    };
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut trace = LossTrace::default();
    let mut best: Option<(f64, Mlp)> = None;
    let mut stale = 0;

    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(params.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| train.inputs[i].as_slice()).collect();
            let ys: Vec<&[f64]> = batch.iter().map(|&i| train.targets[i].as_slice()).collect();
            let loss = net.accumulate_gradient(&xs, &ys, &mut grad);
            if !loss.is_finite() {
                return Err(ModelError::Diverged { epoch, loss });
            }
            epoch_loss += loss * batch.len() as f64;
            adam.update(&mut net, &grad, params);
        }
        trace.train.push(epoch_loss / train.len() as f64);

        let score = if valid.is_empty() {
            net.mse(&train.inputs, &train.targets)
        } else {
            let v = net.mse(&valid.inputs, &valid.targets);
            trace.valid.push(v);
            v
        };
        if !score.is_finite() {
            return Err(ModelError::Diverged { epoch, loss: score });
        }
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, net.clone()));
            trace.best_epoch = Some(epoch);
            stale = 0;
        } else {
            stale += 1;
            if !valid.is_empty() && stale >= params.patience {
                break;
            }
        }
    }
    Ok((best.map_or(net, |(_, n)| n), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plantmodel::MlpConfig;

    fn linear_task(n: usize) -> Dataset {
        let inputs: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect();
        let targets = inputs.iter().map(|x| vec![0.5 * x[0]]).collect();
        Dataset::new(inputs, targets)
    }

    fn config(epochs: usize) -> MlpConfig {
        let mut c = MlpConfig {
            input_dim: 1,
            hidden: vec![8],
            output_dim: 1,
            seed: 0,
            train: TrainParams::default(),
            night_filter: false,
        };
        c.train.epochs = epochs;
        c.train.batch_size = 8;
        c.train.learning_rate = 1e-2;
        c
    }

    #[test]
    fn learns_half_x() {
        let c = config(200);
        let data = linear_task(64);
        let net = Mlp::new(&c, 0).unwrap();
        let (net, trace) = train(net, &data, &Dataset::default(), &c.train, 0).unwrap();
        assert!(net.mse(&data.inputs, &data.targets) < 1e-3);
        assert!(trace.train.last().unwrap() < &trace.train[0]);
    }

    #[test]
    fn zero_epochs_leave_network_unchanged() {
        let c = config(0);
        let net = Mlp::new(&c, 5).unwrap();
        let (out, trace) = train(net.clone(), &linear_task(10), &Dataset::default(), &c.train, 0).unwrap();
        assert_eq!(out, net);
        assert!(trace.train.is_empty());
    }

    #[test]
    fn deterministic() {
        let c = config(20);
        let data = linear_task(40);
        let (tr, va) = data.split_tail(0.1);
        let a = train(Mlp::new(&c, 1).unwrap(), &tr, &va, &c.train, 9).unwrap();
        let b = train(Mlp::new(&c, 1).unwrap(), &tr, &va, &c.train, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_is_reported() {
        let mut c = config(50);
        c.train.learning_rate = 1e300;
        let data = Dataset::new(vec![vec![1e200]; 4], vec![vec![1e200]; 4]);
        let err = train(Mlp::new(&c, 1).unwrap(), &data, &Dataset::default(), &c.train, 0).unwrap_err();
        assert!(matches!(err, ModelError::Diverged { .. }), "{err}");
    }

    #[test]
    fn empty_training_set() {
        let c = config(1);
        assert_eq!(
            train(Mlp::new(&c, 1).unwrap(), &Dataset::default(), &Dataset::default(), &c.train, 0),
            Err(ModelError::EmptyTrainingSet)
        );
    }

    #[test]
    fn split_tail_sizes() {
        let d = linear_task(20);
        let (a, b) = d.split_tail(0.1);
        assert_eq!((a.len(), b.len()), (18, 2));
        let (a, b) = d.split_tail(0.0);
        assert_eq!((a.len(), b.len()), (20, 0));
    }
}
