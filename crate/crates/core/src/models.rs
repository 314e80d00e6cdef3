//! The count-list and place-value successor models.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{
    build_dataset, split_dataset, DatasetSplit, EncodingError, Role, Scheme, SuccessorPair,
    MAX_INPUT,
};
use crate::network::{
    train, Activation, LayerSpec, Loss, NetworkError, NetworkParams, TrainConfig,
};

pub const HIDDEN_WIDTH: usize = 8;
pub const DEFAULT_SPLIT_FRACTION: f64 = 0.8;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("hidden layer {index} does not exist (model has {available})")]
    InvalidLayer { index: usize, available: usize },
    #[error("accuracy of an empty pair list is undefined")]
    EmptyPairs,
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    CountList,
    PlaceValue,
}

impl ModelKind {
    pub fn scheme(self) -> Scheme {
        match self {
            ModelKind::CountList => Scheme::OneHot,
            ModelKind::PlaceValue => Scheme::PlaceValue,
        }
    }

    pub fn loss(self) -> Loss {
        match self {
            ModelKind::CountList => Loss::KlDivergence,
            ModelKind::PlaceValue => Loss::BinaryCrossEntropy,
        }
    }

    pub fn epochs(self) -> usize {
        match self {
            ModelKind::CountList => 2500,
            ModelKind::PlaceValue => 5000,
        }
    }

    pub fn default_learning_rate(self) -> f64 {
        match self {
            ModelKind::CountList => 0.05,
            ModelKind::PlaceValue => 0.003,
        }
    }

    /// 99 -> 8 (ReLU) -> 99 (softmax), or 20 -> 8 -> 8 -> 8 (ReLU) -> 20 (sigmoid).
    pub fn layer_specs(self) -> Vec<LayerSpec> {
        let h = HIDDEN_WIDTH;
        match self {
            ModelKind::CountList => vec![
                LayerSpec::new(99, h, Activation::Relu),
                LayerSpec::new(h, 99, Activation::Softmax),
            ],
            ModelKind::PlaceValue => vec![
                LayerSpec::new(20, h, Activation::Relu),
                LayerSpec::new(h, h, Activation::Relu),
                LayerSpec::new(h, h, Activation::Relu),
                LayerSpec::new(h, 20, Activation::Sigmoid),
            ],
        }
    }

    pub fn hidden_layers(self) -> usize {
        self.layer_specs().len() - 1
    }

    /// Last hidden layer (1-based), used for all representation analyses.
    pub fn default_representation_layer(self) -> usize {
        self.hidden_layers()
    }

    /// Largest number with a valid input encoding.
    pub fn max_representable(self) -> u32 {
        match self {
            ModelKind::CountList => MAX_INPUT,
            ModelKind::PlaceValue => MAX_INPUT + 1,
        }
    }

    pub fn default_train_config(self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs(),
            batch_size: 1,
            learning_rate: self.default_learning_rate(),
            loss: self.loss(),
            seed,
            shuffle_each_epoch: true,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::CountList => "count-list",
            ModelKind::PlaceValue => "place-value",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub params: NetworkParams,
    pub config: TrainConfig,
    pub split: DatasetSplit,
}

impl TrainedModel {
    /// Untrained model on the full dataset with a seeded 80/20 split.
    pub fn new(kind: ModelKind, seed: u64) -> Result<Self> {
        Self::with_fraction(kind, seed, DEFAULT_SPLIT_FRACTION)
    }

    pub fn with_fraction(kind: ModelKind, seed: u64, fraction: f64) -> Result<Self> {
        let pairs = build_dataset(kind.scheme(), MAX_INPUT)?;
        let split = split_dataset(&pairs, fraction, seed)?;
        let params = NetworkParams::init(&kind.layer_specs(), seed)?;
        Ok(Self {
            kind,
            params,
            config: kind.default_train_config(seed),
            split,
        })
    }

    /// Trains on the train split with the stored config.
    pub fn fit(&mut self) -> Result<Vec<f64>> {
        let train_pairs = self.split.train.clone();
        self.fit_on(&train_pairs, &self.config.clone())
    }

    /// Continues training from the current parameters on `pairs`.
    pub fn fit_on(&mut self, pairs: &[SuccessorPair], config: &TrainConfig) -> Result<Vec<f64>> {
        Ok(train(&mut self.params, pairs, config)?)
    }

    pub fn predict_successor(&self, n: u32) -> Result<u32> {
        let scheme = self.kind.scheme();
        let input = scheme.encode(n, Role::Input)?;
        let output = self.params.predict(&input)?;
        Ok(scheme.decode(&output, Role::Output)?)
    }

    /// Predictions for every input in `[0, 98]`, indexed by input.
    pub fn predict_all(&self) -> Result<Vec<u32>> {
        (0..=MAX_INPUT).map(|n| self.predict_successor(n)).collect()
    }

    pub fn exact_match_accuracy(&self, pairs: &[SuccessorPair]) -> Result<f64> {
        if pairs.is_empty() {
            return Err(ModelError::EmptyPairs);
        }
        let mut correct = 0usize;
        for p in pairs {
            if self.predict_successor(p.input_value)? == p.target_value {
                correct += 1;
            }
        }
        Ok(correct as f64 / pairs.len() as f64)
    }

    /// Activation of hidden layer `layer_index` (1-based) for input `n`.
    pub fn hidden_representation(&self, n: u32, layer_index: usize) -> Result<Vec<f64>> {
        let available = self.kind.hidden_layers();
        if layer_index == 0 || layer_index > available {
            return Err(ModelError::InvalidLayer {
                index: layer_index,
                available,
            });
        }
        let input = self.kind.scheme().encode(n, Role::Input)?;
        let mut trace = self.params.forward(&input)?;
        Ok(trace.activations.swap_remove(layer_index - 1))
    }

    /// Representations of `0..=max_representable` for one hidden layer.
    pub fn representations(&self, layer_index: usize) -> Result<Vec<Vec<f64>>> {
        (0..=self.kind.max_representable())
            .map(|n| self.hidden_representation(n, layer_index))
            .collect()
    }
}

/// Fraction of positions where `predicted == correct`.
pub fn accuracy_from_predictions(predicted: &[u32], correct: &[u32]) -> f64 {
    if predicted.is_empty() {
        return 0.0;
    }
    let hits = predicted
        .iter()
        .zip(correct)
        .filter(|(p, c)| p == c)
        .count();
    hits as f64 / predicted.len() as f64
}
