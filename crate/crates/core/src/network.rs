//! Small dense feed-forward networks trained with single-sample SGD.
//!
//! Weights are stored row-major (`out x in`). Backpropagation is hand
//! derived; the softmax + KL and sigmoid + BCE output pairings reduce to
//! `predicted - target` at the output pre-activation.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::SuccessorPair;

/// Lower clamp applied to probabilities before taking a log.
pub const LOG_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("layer {layer} expects {expected} inputs but the previous layer produces {actual}")]
    IncompatibleLayers {
        layer: usize,
        expected: usize,
        actual: usize,
    },
    #[error("layer widths must be at least 1 (layer {0})")]
    EmptyLayer(usize),
    #[error("network needs at least one layer")]
    NoLayers,
    #[error("expected a vector of width {expected}, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },
    #[error("prediction sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("trace or gradients do not match the network shape")]
    ShapeMismatch,
    #[error("learning rate must be positive, got {0}")]
    InvalidLearningRate(f64),
    #[error("only batch size 1 is supported, got {0}")]
    UnsupportedBatchSize(usize),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("loss became non-finite at epoch {epoch} (input {input})")]
    Diverged { epoch: usize, input: u32 },
    #[error("checkpoint i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, NetworkError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Softmax,
    Identity,
}

impl Activation {
    fn apply(self, z: &[f64]) -> Vec<f64> {
        match self {
            Activation::Relu => z.iter().map(|&x| x.max(0.0)).collect(),
            Activation::Sigmoid => z.iter().map(|&x| sigmoid(x)).collect(),
            Activation::Identity => z.to_vec(),
            Activation::Softmax => softmax(z),
        }
    }

    /// Vector-Jacobian product: maps dL/dy to dL/dz given `z` and `y = f(z)`.
    fn backprop(self, z: &[f64], y: &[f64], dy: &[f64]) -> Vec<f64> {
        match self {
            Activation::Relu => z
                .iter()
                .zip(dy)
                .map(|(&zi, &g)| if zi > 0.0 { g } else { 0.0 })
                .collect(),
            Activation::Sigmoid => y.iter().zip(dy).map(|(&s, &g)| g * s * (1.0 - s)).collect(),
            Activation::Identity => dy.to_vec(),
            Activation::Softmax => {
                let dot: f64 = y.iter().zip(dy).map(|(a, b)| a * b).sum();
                y.iter().zip(dy).map(|(&yi, &g)| yi * (g - dot)).collect()
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_width: usize,
    pub output_width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(input_width: usize, output_width: usize, activation: Activation) -> Self {
        Self {
            input_width,
            output_width,
            activation,
        }
    }
}

fn check_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(NetworkError::NoLayers);
    }
    for (i, s) in specs.iter().enumerate() {
        if s.input_width == 0 || s.output_width == 0 {
            return Err(NetworkError::EmptyLayer(i));
        }
        if i > 0 && specs[i - 1].output_width != s.input_width {
            return Err(NetworkError::IncompatibleLayers {
                layer: i,
                expected: s.input_width,
                actual: specs[i - 1].output_width,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub input_width: usize,
    pub output_width: usize,
    pub activation: Activation,
    /// Row-major `output_width x input_width`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn spec(&self) -> LayerSpec {
        LayerSpec::new(self.input_width, self.output_width, self.activation)
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.input_width + col]
    }

    fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.input_width)
            .zip(&self.biases)
            .map(|(row, b)| row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b)
            .collect()
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub layers: Vec<Layer>,
}

/// Everything a forward pass computed, kept for backprop and for reading
/// hidden representations.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    pub pre_activations: Vec<Vec<f64>>,
    pub activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Per-layer gradients with the same shapes as [`NetworkParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &NetworkParams) -> Self {
        Self {
            weights: params
                .layers
                .iter()
                .map(|l| vec![0.0; l.weights.len()])
                .collect(),
            biases: params
                .layers
                .iter()
                .map(|l| vec![0.0; l.biases.len()])
                .collect(),
        }
    }

    /// `self += other`.
    pub fn accumulate(&mut self, other: &Gradients) {
        let pairs = self
            .weights
            .iter_mut()
            .zip(&other.weights)
            .chain(self.biases.iter_mut().zip(&other.biases));
        for (dst, src) in pairs {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }
}

impl NetworkParams {
    /// Weights uniform in `±sqrt(6 / fan_in)`, biases zero.
    pub fn init(specs: &[LayerSpec], seed: u64) -> Result<Self> {
        check_specs(specs)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = specs
            .iter()
            .map(|s| {
                let limit = (6.0 / s.input_width as f64).sqrt();
                let weights = (0..s.input_width * s.output_width)
                    .map(|_| rng.random_range(-limit..=limit))
                    .collect();
                Layer {
                    input_width: s.input_width,
                    output_width: s.output_width,
                    activation: s.activation,
                    weights,
                    biases: vec![0.0; s.output_width],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    /// All-zero weights and biases; mostly useful in tests.
    pub fn zeros(specs: &[LayerSpec]) -> Result<Self> {
        check_specs(specs)?;
        Ok(Self {
            layers: specs
                .iter()
                .map(|s| Layer {
                    input_width: s.input_width,
                    output_width: s.output_width,
                    activation: s.activation,
                    weights: vec![0.0; s.input_width * s.output_width],
                    biases: vec![0.0; s.output_width],
                })
                .collect(),
        })
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(Layer::spec).collect()
    }

    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, |l| l.input_width)
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.output_width)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|x| x.is_finite()))
    }

    pub fn forward(&self, input: &[f64]) -> Result<ForwardTrace> {
        if input.len() != self.input_width() {
            return Err(NetworkError::WidthMismatch {
                expected: self.input_width(),
                actual: input.len(),
            });
        }
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let x = activations.last().map_or(input, Vec::as_slice);
            let z = layer.pre_activation(x);
            let y = layer.activation.apply(&z);
            pre_activations.push(z);
            activations.push(y);
        }
        Ok(ForwardTrace {
            input: input.to_vec(),
            pre_activations,
            activations,
        })
    }

    /// Output of the network for `input`.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut trace = self.forward(input)?;
        Ok(trace.activations.pop().unwrap_or_default())
    }

    /// Exact gradient of `loss(output, target)` with respect to every parameter.
    pub fn backward(&self, trace: &ForwardTrace, target: &[f64], loss: Loss) -> Result<Gradients> {
        let n = self.layers.len();
        if trace.activations.len() != n
            || trace.pre_activations.len() != n
            || trace.input.len() != self.input_width()
            || self
                .layers
                .iter()
                .zip(&trace.activations)
                .any(|(l, a)| a.len() != l.output_width)
        {
            return Err(NetworkError::ShapeMismatch);
        }
        if target.len() != self.output_width() {
            return Err(NetworkError::WidthMismatch {
                expected: self.output_width(),
                actual: target.len(),
            });
        }

        let last = &self.layers[n - 1];
        let output = &trace.activations[n - 1];
        let mut delta: Vec<f64> = match (loss, last.activation) {
            (Loss::KlDivergence, Activation::Softmax)
            | (Loss::BinaryCrossEntropy, Activation::Sigmoid) => {
                output.iter().zip(target).map(|(p, t)| p - t).collect()
            }
            _ => last.activation.backprop(
                &trace.pre_activations[n - 1],
                output,
                &loss.output_gradient(output, target),
            ),
        };

        let mut grads = Gradients::zeros_like(self);
        for k in (0..n).rev() {
            let layer = &self.layers[k];
            let x = if k == 0 {
                &trace.input
            } else {
                &trace.activations[k - 1]
            };
            let gw = &mut grads.weights[k];
            for (row, &d) in gw.chunks_exact_mut(layer.input_width).zip(&delta) {
                if d != 0.0 {
                    for (g, xi) in row.iter_mut().zip(x) {
                        *g = d * xi;
                    }
                }
            }
            grads.biases[k].copy_from_slice(&delta);
            if k > 0 {
                let mut dx = vec![0.0; layer.input_width];
                for (row, &d) in layer.weights.chunks_exact(layer.input_width).zip(&delta) {
                    if d != 0.0 {
                        for (acc, w) in dx.iter_mut().zip(row) {
                            *acc += d * w;
                        }
                    }
                }
                let prev = &self.layers[k - 1];
                delta = prev.activation.backprop(
                    &trace.pre_activations[k - 1],
                    &trace.activations[k - 1],
                    &dx,
                );
            }
        }
        Ok(grads)
    }

    /// `params -= learning_rate * gradients`.
    pub fn sgd_step(&mut self, grads: &Gradients, learning_rate: f64) -> Result<()> {
        let shapes_match = grads.weights.len() == self.layers.len()
            && grads.biases.len() == self.layers.len()
            && self.layers.iter().enumerate().all(|(k, l)| {
                grads.weights[k].len() == l.weights.len() && grads.biases[k].len() == l.biases.len()
            });
        if !shapes_match {
            return Err(NetworkError::ShapeMismatch);
        }
        for (k, layer) in self.layers.iter_mut().enumerate() {
            for (w, g) in layer.weights.iter_mut().zip(&grads.weights[k]) {
                *w -= learning_rate * g;
            }
            for (b, g) in layer.biases.iter_mut().zip(&grads.biases[k]) {
                *b -= learning_rate * g;
            }
        }
        Ok(())
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let io = |source| NetworkError::Io {
            path: path.display().to_string(),
            source,
        };
        let json = serde_json::to_string_pretty(&Checkpoint::from(self))
            .map_err(|e| NetworkError::Format(e.to_string()))?;
        fs::write(path, json).map_err(io)
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| NetworkError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let ckpt: Checkpoint =
            serde_json::from_str(&text).map_err(|e| NetworkError::Format(e.to_string()))?;
        ckpt.into_params()
    }
}

pub const CHECKPOINT_FORMAT: &str = "succ-lab-params";
pub const CHECKPOINT_VERSION: u32 = 1;

/// On-disk parameter layout: a shape header per layer followed by the
/// row-major weight matrix and the bias vector.
#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    layers: Vec<CheckpointLayer>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointLayer {
    rows: usize,
    cols: usize,
    activation: Activation,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl From<&NetworkParams> for Checkpoint {
    fn from(p: &NetworkParams) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            layers: p
                .layers
                .iter()
                .map(|l| CheckpointLayer {
                    rows: l.output_width,
                    cols: l.input_width,
                    activation: l.activation,
                    weights: l.weights.clone(),
                    biases: l.biases.clone(),
                })
                .collect(),
        }
    }
}

impl Checkpoint {
    fn into_params(self) -> Result<NetworkParams> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(NetworkError::Format(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let specs: Vec<LayerSpec> = self
            .layers
            .iter()
            .map(|l| LayerSpec::new(l.cols, l.rows, l.activation))
            .collect();
        check_specs(&specs)?;
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in self.layers {
            if l.weights.len() != l.rows * l.cols || l.biases.len() != l.rows {
                return Err(NetworkError::Format(format!(
                    "layer {}x{} has {} weights and {} biases",
                    l.rows,
                    l.cols,
                    l.weights.len(),
                    l.biases.len()
                )));
            }
            layers.push(Layer {
                input_width: l.cols,
                output_width: l.rows,
                activation: l.activation,
                weights: l.weights,
                biases: l.biases,
            });
        }
        let params = NetworkParams { layers };
        if !params.is_finite() {
            return Err(NetworkError::Format("non-finite parameter".into()));
        }
        Ok(params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    KlDivergence,
    BinaryCrossEntropy,
}

impl Loss {
    pub fn evaluate(self, predicted: &[f64], target: &[f64]) -> Result<f64> {
        match self {
            Loss::KlDivergence => kl_loss(predicted, target),
            Loss::BinaryCrossEntropy => bce_loss(predicted, target),
        }
    }

    /// dL/dy for the clamped loss.
    fn output_gradient(self, predicted: &[f64], target: &[f64]) -> Vec<f64> {
        predicted
            .iter()
            .zip(target)
            .map(|(&p, &t)| match self {
                Loss::KlDivergence => {
                    if t == 0.0 || p < LOG_EPS {
                        0.0
                    } else {
                        -t / p
                    }
                }
                Loss::BinaryCrossEntropy => {
                    let pc = p.clamp(LOG_EPS, 1.0 - LOG_EPS);
                    if pc != p {
                        0.0
                    } else {
                        (p - t) / (p * (1.0 - p))
                    }
                }
            })
            .collect()
    }
}

fn check_widths(predicted: &[f64], target: &[f64]) -> Result<()> {
    if predicted.len() != target.len() {
        return Err(NetworkError::WidthMismatch {
            expected: target.len(),
            actual: predicted.len(),
        });
    }
    Ok(())
}

/// `sum t * ln(t / p)` with `0 ln 0 = 0` and `p` clamped to at least [`LOG_EPS`].
pub fn kl_loss(predicted: &[f64], target: &[f64]) -> Result<f64> {
    check_widths(predicted, target)?;
    let total: f64 = predicted.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(NetworkError::NotNormalized(total));
    }
    let loss = predicted
        .iter()
        .zip(target)
        .filter(|(_, &t)| t > 0.0)
        .map(|(&p, &t)| t * (t.ln() - p.max(LOG_EPS).ln()))
        .sum::<f64>();
    Ok(loss.max(0.0))
}

/// Summed binary cross-entropy over all output units.
pub fn bce_loss(predicted: &[f64], target: &[f64]) -> Result<f64> {
    check_widths(predicted, target)?;
    Ok(-predicted
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let p = p.clamp(LOG_EPS, 1.0 - LOG_EPS);
            t * p.ln() + (1.0 - t) * (1.0 - p).ln()
        })
        .sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub loss: Loss,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size != 1 {
            return Err(NetworkError::UnsupportedBatchSize(self.batch_size));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NetworkError::InvalidLearningRate(self.learning_rate));
        }
        Ok(())
    }
}

/// Runs `epochs * |pairs|` single-sample SGD updates in place and returns the
/// mean loss of each epoch.
pub fn train(
    params: &mut NetworkParams,
    pairs: &[SuccessorPair],
    config: &TrainConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    if config.epochs == 0 {
        return Ok(Vec::new());
    }
    if pairs.is_empty() {
        return Err(NetworkError::EmptyTrainingSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        if config.shuffle_each_epoch {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for &i in &order {
            let pair = &pairs[i];
            let trace = params.forward(&pair.input_vec)?;
            let loss = config.loss.evaluate(trace.output(), &pair.target_vec)?;
            if !loss.is_finite() {
                return Err(NetworkError::Diverged {
                    epoch,
                    input: pair.input_value,
                });
            }
            total += loss;
            let grads = params.backward(&trace, &pair.target_vec, config.loss)?;
            params.sgd_step(&grads, config.learning_rate)?;
        }
        history.push(total / pairs.len() as f64);
    }
    if !params.is_finite() {
        return Err(NetworkError::Diverged {
            epoch: config.epochs,
            input: pairs[order[order.len() - 1]].input_value,
        });
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{build_dataset, Scheme};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::{any, prop, prop_assert, proptest, ProptestConfig};

    fn loss_at(params: &NetworkParams, x: &[f64], t: &[f64], loss: Loss) -> f64 {
        let out = params.predict(x).unwrap();
        match loss {
            Loss::KlDivergence => kl_loss(&out, t).unwrap(),
            Loss::BinaryCrossEntropy => bce_loss(&out, t).unwrap(),
        }
    }

    /// Central-difference estimate of every parameter's gradient.
    fn numeric_gradients(
        params: &NetworkParams,
        x: &[f64],
        t: &[f64],
        loss: Loss,
        h: f64,
    ) -> Gradients {
        let mut g = Gradients::zeros_like(params);
        let mut p = params.clone();
        for k in 0..p.layers.len() {
            for i in 0..p.layers[k].weights.len() {
                let orig = p.layers[k].weights[i];
                p.layers[k].weights[i] = orig + h;
                let up = loss_at(&p, x, t, loss);
                p.layers[k].weights[i] = orig - h;
                let down = loss_at(&p, x, t, loss);
                p.layers[k].weights[i] = orig;
                g.weights[k][i] = (up - down) / (2.0 * h);
            }
            for i in 0..p.layers[k].biases.len() {
                let orig = p.layers[k].biases[i];
                p.layers[k].biases[i] = orig + h;
                let up = loss_at(&p, x, t, loss);
                p.layers[k].biases[i] = orig - h;
                let down = loss_at(&p, x, t, loss);
                p.layers[k].biases[i] = orig;
                g.biases[k][i] = (up - down) / (2.0 * h);
            }
        }
        g
    }

    fn max_rel_error(a: &Gradients, b: &Gradients) -> f64 {
        let flat = |g: &Gradients| -> Vec<f64> {
            g.weights
                .iter()
                .chain(&g.biases)
                .flatten()
                .copied()
                .collect()
        };
        flat(a)
            .iter()
            .zip(flat(b))
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-7))
            .fold(0.0, f64::max)
    }

    #[test]
    fn init_shapes_and_determinism() {
        let specs = [
            LayerSpec::new(99, 8, Activation::Relu),
            LayerSpec::new(8, 99, Activation::Softmax),
        ];
        let a = NetworkParams::init(&specs, 3).unwrap();
        assert_eq!(a, NetworkParams::init(&specs, 3).unwrap());
        assert_eq!(a.layers.len(), 2);
        assert_eq!(a.layers[0].weights.len(), 8 * 99);
        assert_eq!(a.layers[1].weights.len(), 99 * 8);
        assert!(a.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
        let limit = (6.0f64 / 99.0).sqrt();
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= limit));
        let b = NetworkParams::init(&specs, 4).unwrap();
        assert_ne!(a.layers[0].weights[0], b.layers[0].weights[0]);
    }

    #[test]
    fn init_rejects_incompatible_specs() {
        let specs = [
            LayerSpec::new(4, 3, Activation::Relu),
            LayerSpec::new(2, 3, Activation::Sigmoid),
        ];
        assert!(matches!(
            NetworkParams::init(&specs, 0),
            Err(NetworkError::IncompatibleLayers { layer: 1, .. })
        ));
        assert!(matches!(
            NetworkParams::init(&[], 0),
            Err(NetworkError::NoLayers)
        ));
    }

    #[test]
    fn forward_examples() {
        let sig = NetworkParams::zeros(&[LayerSpec::new(3, 4, Activation::Sigmoid)]).unwrap();
        assert_eq!(sig.predict(&[1.0, 2.0, 3.0]).unwrap(), vec![0.5; 4]);

        let soft = NetworkParams::zeros(&[LayerSpec::new(5, 99, Activation::Softmax)]).unwrap();
        let out = soft.predict(&[1.0; 5]).unwrap();
        assert!(out.iter().all(|&p| (p - 1.0 / 99.0).abs() < 1e-15));

        let mut id = NetworkParams::zeros(&[LayerSpec::new(3, 3, Activation::Identity)]).unwrap();
        for i in 0..3 {
            id.layers[0].weights[i * 3 + i] = 1.0;
        }
        assert_eq!(id.predict(&[0.5, -2.0, 7.0]).unwrap(), vec![0.5, -2.0, 7.0]);

        assert!(matches!(
            id.forward(&[1.0]),
            Err(NetworkError::WidthMismatch { .. })
        ));
    }

    #[test]
    fn kl_examples() {
        let mut t = vec![0.0; 99];
        t[17] = 1.0;
        assert_eq!(kl_loss(&t, &t).unwrap(), 0.0);
        let uniform = vec![1.0 / 99.0; 99];
        assert_abs_diff_eq!(kl_loss(&uniform, &t).unwrap(), 99f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(kl_loss(&uniform, &t).unwrap(), 4.595, epsilon = 1e-3);
        let half = [0.5, 0.25, 0.25];
        assert_abs_diff_eq!(
            kl_loss(&half, &[1.0, 0.0, 0.0]).unwrap(),
            2f64.ln(),
            epsilon = 1e-12
        );
        assert!(matches!(
            kl_loss(&[0.5, 0.2], &[1.0, 0.0]),
            Err(NetworkError::NotNormalized(_))
        ));
        // a zero at the target index is clamped rather than infinite
        let l = kl_loss(&[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(l, -LOG_EPS.ln(), epsilon = 1e-9);
    }

    #[test]
    fn bce_examples() {
        let mut t = vec![0.0; 20];
        t[3] = 1.0;
        t[14] = 1.0;
        assert!(bce_loss(&t, &t).unwrap() < 1e-9);
        assert_abs_diff_eq!(
            bce_loss(&[0.5; 20], &t).unwrap(),
            20.0 * 2f64.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(bce_loss(&[0.5; 20], &t).unwrap(), 13.863, epsilon = 1e-3);
        let p: Vec<f64> = t
            .iter()
            .map(|&x| if x == 1.0 { 0.9 } else { 0.1 })
            .collect();
        assert_abs_diff_eq!(
            bce_loss(&p, &t).unwrap(),
            -20.0 * 0.9f64.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(bce_loss(&p, &t).unwrap(), 2.107, epsilon = 1e-3);
    }

    #[test]
    fn gradient_check_5_4_3() {
        for (loss, out_act) in [
            (Loss::KlDivergence, Activation::Softmax),
            (Loss::BinaryCrossEntropy, Activation::Sigmoid),
        ] {
            let specs = [
                LayerSpec::new(5, 4, Activation::Relu),
                LayerSpec::new(4, 3, out_act),
            ];
            let mut p = NetworkParams::init(&specs, 11).unwrap();
            // nonzero biases keep ReLU pre-activations away from the kink
            for l in &mut p.layers {
                for (i, b) in l.biases.iter_mut().enumerate() {
                    *b = 0.1 * (i as f64 + 1.0);
                }
            }
            let x = [0.3, -0.7, 1.1, 0.2, -0.4];
            let t = [0.0, 1.0, 0.0];
            let trace = p.forward(&x).unwrap();
            let analytic = p.backward(&trace, &t, loss).unwrap();
            let numeric = numeric_gradients(&p, &x, &t, loss, 1e-5);
            assert!(max_rel_error(&analytic, &numeric) < 1e-5, "{loss:?}");
        }
    }

    #[test]
    fn hidden_softmax_and_identity_backprop() {
        // generic vector-Jacobian paths, including a non-simplified output pairing
        let specs = [
            LayerSpec::new(3, 4, Activation::Softmax),
            LayerSpec::new(4, 4, Activation::Identity),
            LayerSpec::new(4, 3, Activation::Sigmoid),
        ];
        let p = NetworkParams::init(&specs, 5).unwrap();
        let x = [0.5, -1.0, 2.0];
        let t = [1.0, 0.0, 1.0];
        let trace = p.forward(&x).unwrap();
        let analytic = p.backward(&trace, &t, Loss::BinaryCrossEntropy).unwrap();
        let numeric = numeric_gradients(&p, &x, &t, Loss::BinaryCrossEntropy, 1e-5);
        assert!(max_rel_error(&analytic, &numeric) < 1e-5);

        let sig_kl = [
            LayerSpec::new(3, 4, Activation::Sigmoid),
            LayerSpec::new(4, 3, Activation::Identity),
            LayerSpec::new(3, 3, Activation::Softmax),
        ];
        let p = NetworkParams::init(&sig_kl, 6).unwrap();
        let trace = p.forward(&x).unwrap();
        let t = [0.0, 0.0, 1.0];
        let analytic = p.backward(&trace, &t, Loss::KlDivergence).unwrap();
        let numeric = numeric_gradients(&p, &x, &t, Loss::KlDivergence, 1e-5);
        assert!(max_rel_error(&analytic, &numeric) < 1e-5);
    }

    #[test]
    fn zero_output_gradient_at_target() {
        let specs = [
            LayerSpec::new(2, 2, Activation::Relu),
            LayerSpec::new(2, 4, Activation::Sigmoid),
        ];
        let p = NetworkParams::zeros(&specs).unwrap();
        let trace = p.forward(&[1.0, 1.0]).unwrap();
        let target = trace.output().to_vec();
        let g = p
            .backward(&trace, &target, Loss::BinaryCrossEntropy)
            .unwrap();
        assert!(g.weights[1].iter().chain(&g.biases[1]).all(|&x| x == 0.0));
    }

    #[test]
    fn gradients_are_linear_in_loss_terms() {
        let specs = [
            LayerSpec::new(3, 3, Activation::Relu),
            LayerSpec::new(3, 3, Activation::Softmax),
        ];
        let p = NetworkParams::init(&specs, 9).unwrap();
        let trace = p.forward(&[0.2, 0.9, -0.3]).unwrap();
        let t = [0.0, 0.0, 1.0];
        let single = p.backward(&trace, &t, Loss::KlDivergence).unwrap();
        let mut doubled = single.clone();
        doubled.accumulate(&single);
        for (d, s) in doubled
            .weights
            .iter()
            .chain(&doubled.biases)
            .flatten()
            .zip(single.weights.iter().chain(&single.biases).flatten())
        {
            assert_eq!(*d, 2.0 * s);
        }
    }

    #[test]
    fn backward_rejects_foreign_trace() {
        let p = NetworkParams::zeros(&[LayerSpec::new(2, 3, Activation::Sigmoid)]).unwrap();
        let q = NetworkParams::zeros(&[LayerSpec::new(2, 4, Activation::Sigmoid)]).unwrap();
        let trace = q.forward(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            p.backward(&trace, &[0.0; 3], Loss::BinaryCrossEntropy),
            Err(NetworkError::ShapeMismatch)
        ));
    }

    #[test]
    fn sgd_step_examples() {
        let mut p = NetworkParams::zeros(&[LayerSpec::new(1, 1, Activation::Identity)]).unwrap();
        p.layers[0].weights[0] = 1.0;
        let before = p.clone();
        let mut g = Gradients::zeros_like(&p);
        p.sgd_step(&g, 0.1).unwrap();
        assert_eq!(p, before);
        g.weights[0][0] = 2.0;
        p.sgd_step(&g, 0.0).unwrap();
        assert_eq!(p, before);
        p.sgd_step(&g, 0.1).unwrap();
        assert_abs_diff_eq!(p.layers[0].weights[0], 0.8, epsilon = 1e-15);

        let wrong = Gradients {
            weights: vec![vec![0.0; 2]],
            biases: vec![vec![0.0]],
        };
        assert!(p.sgd_step(&wrong, 0.1).is_err());
    }

    fn tiny_config(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 1,
            learning_rate: 0.05,
            loss: Loss::KlDivergence,
            seed: 1,
            shuffle_each_epoch: true,
        }
    }

    fn tiny_count_specs(width: usize) -> [LayerSpec; 2] {
        [
            LayerSpec::new(99, width, Activation::Relu),
            LayerSpec::new(width, 99, Activation::Softmax),
        ]
    }

    #[test]
    fn train_zero_epochs_is_noop() {
        let pairs = build_dataset(Scheme::OneHot, 9).unwrap();
        let mut p = NetworkParams::init(&tiny_count_specs(8), 2).unwrap();
        let before = p.clone();
        let history = train(&mut p, &pairs, &tiny_config(0)).unwrap();
        assert!(history.is_empty());
        assert_eq!(p, before);
    }

    #[test]
    fn train_is_deterministic_and_reduces_loss() {
        let pairs = build_dataset(Scheme::OneHot, 9).unwrap();
        let run = || {
            let mut p = NetworkParams::init(&tiny_count_specs(8), 2).unwrap();
            let h = train(&mut p, &pairs, &tiny_config(200)).unwrap();
            (p, h)
        };
        let (pa, ha) = run();
        let (pb, hb) = run();
        assert_eq!(ha, hb);
        assert_eq!(pa, pb);
        assert_eq!(ha.len(), 200);
        assert!(ha[199] < ha[0] * 0.2);
    }

    #[test]
    fn train_rejects_bad_config() {
        let pairs = build_dataset(Scheme::OneHot, 9).unwrap();
        let mut p = NetworkParams::init(&tiny_count_specs(4), 2).unwrap();
        let mut cfg = tiny_config(1);
        cfg.batch_size = 4;
        assert!(matches!(
            train(&mut p, &pairs, &cfg),
            Err(NetworkError::UnsupportedBatchSize(4))
        ));
        cfg.batch_size = 1;
        cfg.learning_rate = 0.0;
        assert!(train(&mut p, &pairs, &cfg).is_err());
        cfg.learning_rate = 0.1;
        assert!(matches!(
            train(&mut p, &[], &cfg),
            Err(NetworkError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let mut pairs = build_dataset(Scheme::PlaceValue, 9).unwrap();
        pairs[4].input_vec[0] = f64::NAN;
        let specs = [
            LayerSpec::new(20, 8, Activation::Identity),
            LayerSpec::new(8, 20, Activation::Sigmoid),
        ];
        let mut p = NetworkParams::init(&specs, 1).unwrap();
        let cfg = TrainConfig {
            loss: Loss::BinaryCrossEntropy,
            shuffle_each_epoch: false,
            ..tiny_config(5)
        };
        assert!(matches!(
            train(&mut p, &pairs, &cfg),
            Err(NetworkError::Diverged { epoch: 0, input: 4 })
        ));
    }

    #[test]
    fn checkpoint_round_trip() {
        let p = NetworkParams::init(&tiny_count_specs(8), 12).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.json");
        p.save_checkpoint(&path).unwrap();
        assert_eq!(NetworkParams::load_checkpoint(&path).unwrap(), p);

        std::fs::write(&path, r#"{"format":"other","version":1,"layers":[]}"#).unwrap();
        assert!(matches!(
            NetworkParams::load_checkpoint(&path),
            Err(NetworkError::Format(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn gradient_check_random_small_nets(
            seed in any::<u64>(),
            widths in prop::collection::vec(1usize..=6, 3..=4),
            bce in any::<bool>(),
        ) {
            let out_act = if bce { Activation::Sigmoid } else { Activation::Softmax };
            let loss = if bce { Loss::BinaryCrossEntropy } else { Loss::KlDivergence };
            let specs: Vec<LayerSpec> = widths
                .windows(2)
                .enumerate()
                .map(|(i, w)| {
                    let act = if i + 2 == widths.len() { out_act } else { Activation::Sigmoid };
                    LayerSpec::new(w[0], w[1], act)
                })
                .collect();
            let p = NetworkParams::init(&specs, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
            let x: Vec<f64> = (0..widths[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
            let out_w = *widths.last().unwrap();
            let mut t = vec![0.0; out_w];
            t[rng.random_range(0..out_w)] = 1.0;
            let trace = p.forward(&x).unwrap();
            let analytic = p.backward(&trace, &t, loss).unwrap();
            let numeric = numeric_gradients(&p, &x, &t, loss, 1e-5);
            prop_assert!(max_rel_error(&analytic, &numeric) <= 1e-4);
        }

        #[test]
        fn activations_are_well_formed(seed in any::<u64>(), scale in 0.1f64..50.0) {
            let specs = [
                LayerSpec::new(4, 6, Activation::Relu),
                LayerSpec::new(6, 5, Activation::Softmax),
            ];
            let p = NetworkParams::init(&specs, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..4).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            let trace = p.forward(&x).unwrap();
            prop_assert!(trace.activations[0].iter().all(|&h| h >= 0.0 && h.is_finite()));
            let out = trace.output();
            prop_assert!((out.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            let mut t = vec![0.0; 5];
            t[seed as usize % 5] = 1.0;
            prop_assert!(kl_loss(out, &t).unwrap() >= 0.0);
        }
    }
}
