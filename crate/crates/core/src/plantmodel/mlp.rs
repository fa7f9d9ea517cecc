use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Optimizer and stopping parameters for mini-batch Adam on MSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainParams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Trailing fraction of training windows held out for early stopping.
    pub validation_fraction: f64,
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 300,
            validation_fraction: 0.1,
            patience: 20,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    /// ReLU hidden layer widths.
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    pub seed: u64,
    #[serde(default)]
    pub train: TrainParams,
    /// Zero predictions for leads with zero solar elevation.
    #[serde(default)]
    pub night_filter: bool,
}

impl MlpConfig {
    /// Input width `h + n·f + f` for `h` lags, `n` weather rows and `f` leads.
    pub fn for_windows(history: usize, weather_features: usize, horizon: usize) -> Self {
        Self {
            input_dim: history + weather_features * horizon + horizon,
            hidden: vec![90, 80],
            output_dim: horizon,
            seed: 0,
            train: TrainParams::default(),
            night_filter: false,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.iter().any(|&w| w == 0) {
            return Err(ModelError::InvalidConfig(format!(
                "all layer widths must be >= 1: {} -> {:?} -> {}",
                self.input_dim, self.hidden, self.output_dim
            )));
        }
        let t = &self.train;
        if t.batch_size == 0 || !(t.learning_rate > 0.0) || !(0.0..1.0).contains(&t.validation_fraction) {
            return Err(ModelError::InvalidConfig(format!("bad training parameters: {t:?}")));
        }
        Ok(())
    }

    /// `[input, hidden..., output]`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.input_dim);
        w.extend_from_slice(&self.hidden);
        w.push(self.output_dim);
        w
    }

    pub fn hidden_label(&self) -> String {
        self.hidden.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("-")
    }
}

/// Dense layer, weights stored row-major as `n_out × n_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            biases: vec![0.0; n_out],
        }
    }

    fn affine(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out.iter_mut().zip(self.weights.chunks_exact(self.n_in).zip(&self.biases)) {
            *o = b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

/// Fully connected network: ReLU on hidden layers, identity output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Per-layer parameter gradients, laid out like [`Mlp`] layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<Layer>,
}

impl Gradient {
    fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net.layers.iter().map(|l| Layer::zeros(l.n_in, l.n_out)).collect(),
        }
    }
}

impl Mlp {
    /// Fan-in uniform initialization `U(-sqrt(6/n_in), sqrt(6/n_in))`, zero biases.
    pub fn new(config: &MlpConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let widths = config.widths();
        let layers = widths
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let bound = (6.0 / n_in as f64).sqrt();
                let weights = (0..n_in * n_out).map(|_| rng.random_range(-bound..bound)).collect();
                Layer {
                    n_in,
                    n_out,
                    weights,
                    biases: vec![0.0; n_out],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self, ModelError> {
        if layers.is_empty() {
            return Err(ModelError::InvalidConfig("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.n_in == 0 || l.n_out == 0 || l.weights.len() != l.n_in * l.n_out || l.biases.len() != l.n_out {
                return Err(ModelError::InvalidConfig(format!("layer {i} has inconsistent shape")));
            }
        }
        if let Some(i) = layers.windows(2).position(|w| w[0].n_out != w[1].n_in) {
            return Err(ModelError::InvalidConfig(format!("layer {i} output does not feed layer {}", i + 1)));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").n_out
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        if x.len() != self.input_dim() {
            return Err(ModelError::Shape {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut a = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = vec![0.0; layer.n_out];
            layer.affine(&a, &mut z);
            if i < last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            a = z;
        }
        a
    }

    /// Mean over the batch of per-sample mean squared error across outputs,
    /// and its gradient with respect to every weight and bias.
    pub fn loss_and_gradient(&self, inputs: &[&[f64]], targets: &[&[f64]]) -> (f64, Gradient) {
        let mut grad = Gradient::zeros_like(self);
        let loss = self.accumulate_gradient(inputs, targets, &mut grad);
        (loss, grad)
    }

    pub(crate) fn accumulate_gradient(&self, inputs: &[&[f64]], targets: &[&[f64]], grad: &mut Gradient) -> f64 {
        for g in &mut grad.layers {
            g.weights.iter_mut().for_each(|v| *v = 0.0);
            g.biases.iter_mut().for_each(|v| *v = 0.0);
        }
        let batch = inputs.len() as f64;
        let out_dim = self.output_dim() as f64;
        let last = self.layers.len() - 1;
        let mut total = 0.0;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        for (x, y) in inputs.iter().zip(targets) {
            acts.clear();
            acts.push(x.to_vec());
            for (i, layer) in self.layers.iter().enumerate() {
                let mut z = vec![0.0; layer.n_out];
                layer.affine(&acts[i], &mut z);
                if i < last {
                    z.iter_mut().for_each(|v| *v = v.max(0.0));
                }
                acts.push(z);
            }
            let pred = &acts[self.layers.len()];
            let mut delta: Vec<f64> = pred
                .iter()
                .zip(y.iter())
                .map(|(p, t)| {
                    total += (p - t) * (p - t);
                    2.0 * (p - t) / (batch * out_dim)
                })
                .collect();
            for i in (0..self.layers.len()).rev() {
                let layer = &self.layers[i];
                let a_in = &acts[i];
                let g = &mut grad.layers[i];
                for (o, d) in delta.iter().enumerate() {
                    g.biases[o] += d;
                    if *d != 0.0 {
                        let row = &mut g.weights[o * layer.n_in..(o + 1) * layer.n_in];
                        row.iter_mut().zip(a_in).for_each(|(gw, a)| *gw += d * a);
                    }
                }
                if i > 0 {
                    let mut prev = vec![0.0; layer.n_in];
                    for (o, d) in delta.iter().enumerate() {
                        if *d != 0.0 {
                            let row = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                            prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
                        }
                    }
                    // ReLU derivative on the activation feeding this layer
                    for (p, a) in prev.iter_mut().zip(a_in) {
                        if *a <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        total / (batch * out_dim)
    }

    /// Mean squared error over a whole dataset.
    pub fn mse(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
        if inputs.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        for (x, y) in inputs.iter().zip(targets) {
            let p = self.forward_unchecked(x);
            total += p.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64;
        }
        total / inputs.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(hidden: Vec<usize>) -> MlpConfig {
        MlpConfig {
            input_dim: 3,
            hidden,
            output_dim: 2,
            seed: 0,
            train: TrainParams::default(),
            night_filter: false,
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut net = Mlp::new(&tiny_config(vec![4]), 1).unwrap();
        for l in net.layers_mut() {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_network() {
        let mut l = Layer::zeros(3, 3);
        for i in 0..3 {
            l.weights[i * 3 + i] = 1.0;
        }
        let net = Mlp::from_layers(vec![l]).unwrap();
        assert_eq!(net.forward(&[0.5, -1.0, 2.0]).unwrap(), vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn shape_mismatch() {
        let net = Mlp::new(&tiny_config(vec![4]), 1).unwrap();
        assert_eq!(net.forward(&[1.0]), Err(ModelError::Shape { expected: 3, got: 1 }));
        assert!(Mlp::from_layers(vec![Layer::zeros(3, 4), Layer::zeros(5, 2)]).is_err());
        assert!(Mlp::new(&tiny_config(vec![0]), 1).is_err());
    }

    #[test]
    fn default_window_config_has_96_inputs() {
        let c = MlpConfig::for_windows(24, 2, 24);
        assert_eq!(c.widths(), vec![96, 90, 80, 24]);
    }

    #[test]
    fn init_is_seeded() {
        let c = tiny_config(vec![5, 4]);
        assert_eq!(Mlp::new(&c, 3).unwrap(), Mlp::new(&c, 3).unwrap());
        assert_ne!(Mlp::new(&c, 3).unwrap(), Mlp::new(&c, 4).unwrap());
    }
}
