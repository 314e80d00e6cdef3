//! Successor dataset and the two number encodings.
//!
//! Inputs range over `[0, 98]` and targets over `[1, 99]`. The count-list
//! scheme one-hot encodes a number into 99 units; input `N` sits at index `N`,
//! output `N` at index `N - 1`. The place-value scheme uses 20 units: a one-hot
//! tens block in `[0, 9]` followed by a one-hot ones block in `[10, 19]`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest input number of the full dataset.
pub const MAX_INPUT: u32 = 98;
/// Largest number any encoder accepts (the successor of [`MAX_INPUT`]).
pub const MAX_NUMBER: u32 = 99;
/// Width of a count-list (one-hot) vector.
pub const ONE_HOT_WIDTH: usize = 99;
/// Width of a place-value (two-hot) vector.
pub const PLACE_VALUE_WIDTH: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodingError {
    #[error("number {value} outside [{min}, {max}]")]
    OutOfRange { value: u32, min: u32, max: u32 },
    #[error("one-hot index {index} outside a vector of width {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("expected a vector of width {expected}, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },
    #[error("domain maximum {0} outside [1, 98]")]
    InvalidDomain(u32),
    #[error("split fraction {fraction} of {total} pairs leaves an empty train or test set")]
    DegenerateSplit { fraction: f64, total: usize },
}

pub type Result<T> = std::result::Result<T, EncodingError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    OneHot,
    PlaceValue,
}

/// Whether a vector encodes a network input or a network output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Input,
    Output,
}

impl Scheme {
    pub fn width(self) -> usize {
        match self {
            Scheme::OneHot => ONE_HOT_WIDTH,
            Scheme::PlaceValue => PLACE_VALUE_WIDTH,
        }
    }

    pub fn encode(self, n: u32, role: Role) -> Result<Vec<f64>> {
        match self {
            Scheme::OneHot => encode_count(n, role),
            Scheme::PlaceValue => encode_place_value(n),
        }
    }

    pub fn decode(self, v: &[f64], role: Role) -> Result<u32> {
        match self {
            Scheme::OneHot => decode_one_hot(v, role),
            Scheme::PlaceValue => decode_place_value(v),
        }
    }
}

/// `S(n) = n + 1` on the lab's input domain.
pub fn successor(n: u32) -> Result<u32> {
    check_range(n, 0, MAX_INPUT)?;
    Ok(n + 1)
}

/// Tens-boundary inputs are those whose successor changes the tens digit.
pub fn is_boundary_input(n: u32) -> bool {
    n % 10 == 9
}

fn check_range(n: u32, min: u32, max: u32) -> Result<()> {
    if n < min || n > max {
        return Err(EncodingError::OutOfRange { value: n, min, max });
    }
    Ok(())
}

/// A vector of `size` zeros with a single `1.0` at `index`.
pub fn encode_one_hot(index: usize, size: usize) -> Result<Vec<f64>> {
    if index >= size {
        return Err(EncodingError::IndexOutOfRange { index, size });
    }
    let mut v = vec![0.0; size];
    v[index] = 1.0;
    Ok(v)
}

/// One-hot index of `n` in the count-list scheme.
pub fn one_hot_index(n: u32, role: Role) -> Result<usize> {
    match role {
        Role::Input => {
            check_range(n, 0, MAX_INPUT)?;
            Ok(n as usize)
        }
        Role::Output => {
            check_range(n, 1, MAX_NUMBER)?;
            Ok(n as usize - 1)
        }
    }
}

/// Count-list encoding of `n` for the given role.
pub fn encode_count(n: u32, role: Role) -> Result<Vec<f64>> {
    encode_one_hot(one_hot_index(n, role)?, ONE_HOT_WIDTH)
}

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn decode_one_hot(v: &[f64], role: Role) -> Result<u32> {
    if v.len() != ONE_HOT_WIDTH {
        return Err(EncodingError::WidthMismatch {
            expected: ONE_HOT_WIDTH,
            actual: v.len(),
        });
    }
    let k = argmax(v) as u32;
    Ok(match role {
        Role::Input => k,
        Role::Output => k + 1,
    })
}

pub fn encode_place_value(n: u32) -> Result<Vec<f64>> {
    check_range(n, 0, MAX_NUMBER)?;
    let mut v = vec![0.0; PLACE_VALUE_WIDTH];
    v[(n / 10) as usize] = 1.0;
    v[10 + (n % 10) as usize] = 1.0;
    Ok(v)
}

/// Reads the tens and ones blocks independently; any sigmoid output decodes
/// to some number in `[0, 99]`.
pub fn decode_place_value(v: &[f64]) -> Result<u32> {
    if v.len() != PLACE_VALUE_WIDTH {
        return Err(EncodingError::WidthMismatch {
            expected: PLACE_VALUE_WIDTH,
            actual: v.len(),
        });
    }
    let tens = argmax(&v[..10]) as u32;
    let ones = argmax(&v[10..]) as u32;
    Ok(10 * tens + ones)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessorPair {
    pub input_value: u32,
    pub target_value: u32,
    pub input_vec: Vec<f64>,
    pub target_vec: Vec<f64>,
}

impl SuccessorPair {
    pub fn new(scheme: Scheme, n: u32) -> Result<Self> {
        let target = successor(n)?;
        Ok(Self {
            input_value: n,
            target_value: target,
            input_vec: scheme.encode(n, Role::Input)?,
            target_vec: scheme.encode(target, Role::Output)?,
        })
    }
}

/// One pair per input in `[0, domain_max]`.
pub fn build_dataset(scheme: Scheme, domain_max: u32) -> Result<Vec<SuccessorPair>> {
    if !(1..=MAX_INPUT).contains(&domain_max) {
        return Err(EncodingError::InvalidDomain(domain_max));
    }
    (0..=domain_max)
        .map(|n| SuccessorPair::new(scheme, n))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<SuccessorPair>,
    pub test: Vec<SuccessorPair>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn train_inputs(&self) -> Vec<u32> {
        self.train.iter().map(|p| p.input_value).collect()
    }

    pub fn test_inputs(&self) -> Vec<u32> {
        self.test.iter().map(|p| p.input_value).collect()
    }

    /// Train pairs whose input does not exceed `domain_max`.
    pub fn train_up_to(&self, domain_max: u32) -> Vec<SuccessorPair> {
        self.train
            .iter()
            .filter(|p| p.input_value <= domain_max)
            .cloned()
            .collect()
    }
}

/// Seeded uniform sample without replacement of `round(fraction * |pairs|)`
/// training pairs. Both halves are returned in ascending input order.
pub fn split_dataset(pairs: &[SuccessorPair], fraction: f64, seed: u64) -> Result<DatasetSplit> {
    let total = pairs.len();
    let n_train = (fraction * total as f64).round();
    if !(fraction > 0.0 && fraction < 1.0) || n_train < 1.0 || n_train as usize >= total {
        return Err(EncodingError::DegenerateSplit { fraction, total });
    }
    let n_train = n_train as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng);
    let mut in_train = vec![false; total];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    let (train, test): (Vec<_>, Vec<_>) = pairs
        .iter()
        .zip(in_train)
        .partition(|(_, is_train)| *is_train);
    Ok(DatasetSplit {
        train: train.into_iter().map(|(p, _)| p.clone()).collect(),
        test: test.into_iter().map(|(p, _)| p.clone()).collect(),
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurriculumStage {
    pub stage_index: u32,
    pub domain_max: u32,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurriculumSchedule {
    pub stages: Vec<CurriculumStage>,
}

/// Twenty more numbers every 1000 epochs, then a final 1000-epoch pass over
/// the full range.
pub fn curriculum_stages() -> CurriculumSchedule {
    const EPOCHS: usize = 1000;
    let maxima = [19, 39, 59, 79, MAX_INPUT, MAX_INPUT];
    CurriculumSchedule {
        stages: maxima
            .iter()
            .enumerate()
            .map(|(i, &domain_max)| CurriculumStage {
                stage_index: i as u32 + 1,
                domain_max,
                epochs: EPOCHS,
            })
            .collect(),
    }
}
