//! Representational geometry of hidden layers: successive cosine similarity,
//! tens-boundary aggregation, classical MDS and boundary-vector statistics.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::is_boundary_input;
use crate::stats::{pearson_r, two_sample_t, StatsError, TTestResult, Tail};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReprError {
    #[error("no representation for number {0}")]
    Missing(u32),
    #[error("vectors have different widths ({0} vs {1})")]
    WidthMismatch(usize, usize),
    #[error("{0} group is empty")]
    EmptyGroup(&'static str),
    #[error("MDS needs at least 3 points and a target dimension below the point count (got {points} points, dim {dim})")]
    TooFewPoints { points: usize, dim: usize },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("expected {expected} simulations per model, got {actual}")]
    SimCountMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

pub type Result<T> = std::result::Result<T, ReprError>;

/// Hidden representations indexed by number, starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationSet {
    pub vectors: Vec<Vec<f64>>,
    pub layer: usize,
    pub seed: u64,
}

impl RepresentationSet {
    pub fn get(&self, n: u32) -> Result<&[f64]> {
        self.vectors
            .get(n as usize)
            .map(Vec::as_slice)
            .ok_or(ReprError::Missing(n))
    }
}

/// `u.v / (|u||v|)`, or `None` when either vector is zero.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<Option<f64>> {
    if u.len() != v.len() {
        return Err(ReprError::WidthMismatch(u.len(), v.len()));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Ok(None);
    }
    Ok(Some((dot / (nu * nv)).clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityPoint {
    pub n: u32,
    pub cosine: Option<f64>,
}

/// Cosine between each number and its successor, for every `n` whose
/// successor is also represented.
pub fn successive_similarities(reps: &RepresentationSet) -> Result<Vec<SimilarityPoint>> {
    if reps.vectors.len() < 2 {
        return Err(ReprError::Missing(reps.vectors.len() as u32));
    }
    reps.vectors
        .windows(2)
        .enumerate()
        .map(|(n, w)| {
            Ok(SimilarityPoint {
                n: n as u32,
                cosine: cosine(&w[0], &w[1])?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAggregate {
    pub boundary_means: Vec<f64>,
    pub nonboundary_means: Vec<f64>,
    pub boundary_terms: usize,
    pub nonboundary_terms: usize,
    /// Similarities dropped because a representation was the zero vector.
    pub undefined: usize,
}

/// Per-simulation mean similarity over tens-boundary inputs and over the rest.
pub fn boundary_aggregate(per_sim: &[Vec<SimilarityPoint>]) -> Result<BoundaryAggregate> {
    let mut out = BoundaryAggregate {
        boundary_means: Vec::with_capacity(per_sim.len()),
        nonboundary_means: Vec::with_capacity(per_sim.len()),
        boundary_terms: 0,
        nonboundary_terms: 0,
        undefined: 0,
    };
    for sims in per_sim {
        let (mut b, mut nb) = (Vec::new(), Vec::new());
        for p in sims {
            match p.cosine {
                Some(c) if is_boundary_input(p.n) => b.push(c),
                Some(c) => nb.push(c),
                None => out.undefined += 1,
            }
        }
        if b.is_empty() {
            return Err(ReprError::EmptyGroup("boundary"));
        }
        if nb.is_empty() {
            return Err(ReprError::EmptyGroup("non-boundary"));
        }
        out.boundary_terms = out.boundary_terms.max(b.len());
        out.nonboundary_terms = out.nonboundary_terms.max(nb.len());
        out.boundary_means
            .push(b.iter().sum::<f64>() / b.len() as f64);
        out.nonboundary_means
            .push(nb.iter().sum::<f64>() / nb.len() as f64);
    }
    Ok(out)
}

/// Mean of the defined similarities, if any.
pub fn mean_similarity(points: &[SimilarityPoint]) -> Option<f64> {
    let defined: Vec<f64> = points.iter().filter_map(|p| p.cosine).collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Torgerson double-centering `B = -1/2 J D^2 J` of squared Euclidean distances.
pub fn double_centered_gram(points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let k = points.len();
    let width = points.first().map_or(0, Vec::len);
    if let Some(p) = points.iter().find(|p| p.len() != width) {
        return Err(ReprError::WidthMismatch(width, p.len()));
    }
    let d2 = DMatrix::from_fn(k, k, |i, j| {
        points[i]
            .iter()
            .zip(&points[j])
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
    });
    let row_means: Vec<f64> = (0..k).map(|i| d2.row(i).sum() / k as f64).collect();
    let grand = row_means.iter().sum::<f64>() / k as f64;
    Ok(DMatrix::from_fn(k, k, |i, j| {
        -0.5 * (d2[(i, j)] - row_means[i] - row_means[j] + grand)
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdsResult {
    /// One row of `dim` coordinates per input point.
    pub coords: Vec<Vec<f64>>,
    /// Leading eigenvalues of the double-centered matrix, descending.
    pub eigenvalues: Vec<f64>,
}

/// Classical (Torgerson) MDS into `dim` dimensions.
///
/// Eigenvectors are sign-normalized so their largest-magnitude entry is
/// positive, which makes the embedding reproducible. Negative eigenvalues
/// are clipped to zero.
pub fn classical_mds(points: &[Vec<f64>], dim: usize) -> Result<MdsResult> {
    let k = points.len();
    if k < 3 || dim == 0 || dim >= k {
        return Err(ReprError::TooFewPoints { points: k, dim });
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(ReprError::NonFinite);
    }
    let b = double_centered_gram(points)?;
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .total_cmp(&eig.eigenvalues[i])
            .then(i.cmp(&j))
    });

    let mut coords = vec![vec![0.0; dim]; k];
    let mut eigenvalues = Vec::with_capacity(dim);
    for (c, &idx) in order.iter().take(dim).enumerate() {
        let lambda = eig.eigenvalues[idx].max(0.0);
        eigenvalues.push(lambda);
        let v = eig.eigenvectors.column(idx);
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let scale = lambda.sqrt();
        for (row, &x) in coords.iter_mut().zip(v.iter()) {
            row[c] = sign * x * scale;
        }
    }
    Ok(MdsResult {
        coords,
        eigenvalues,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding2D {
    pub numbers: Vec<u32>,
    pub coords: Vec<[f64; 2]>,
    pub eigenvalues: [f64; 2],
}

impl Embedding2D {
    pub fn coord(&self, n: u32) -> Result<[f64; 2]> {
        self.numbers
            .iter()
            .position(|&m| m == n)
            .map(|i| self.coords[i])
            .ok_or(ReprError::Missing(n))
    }
}

/// Which numbers the MDS embedding is fit on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MdsPointSet {
    /// The eighteen numbers `{9, 10, 19, 20, ..., 89, 90}`.
    Boundary18,
    /// Every represented number.
    All,
}

pub fn boundary_numbers() -> Vec<u32> {
    (0..9).flat_map(|k| [10 * k + 9, 10 * k + 10]).collect()
}

/// 2D classical MDS of the chosen numbers' representations.
pub fn embed_representations(reps: &RepresentationSet, set: MdsPointSet) -> Result<Embedding2D> {
    let numbers: Vec<u32> = match set {
        MdsPointSet::Boundary18 => boundary_numbers(),
        MdsPointSet::All => (0..reps.vectors.len() as u32).collect(),
    };
    let points = numbers
        .iter()
        .map(|&n| reps.get(n).map(<[f64]>::to_vec))
        .collect::<Result<Vec<_>>>()?;
    let mds = classical_mds(&points, 2)?;
    Ok(Embedding2D {
        numbers,
        coords: mds.coords.iter().map(|c| [c[0], c[1]]).collect(),
        eigenvalues: [mds.eigenvalues[0], mds.eigenvalues[1]],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleDispersion {
    /// `sqrt(-2 ln R)`, R the mean resultant length.
    Circular,
    /// Sample standard deviation of the raw `atan2` angles.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryVectorStats {
    /// `atan2(dy, dx)` in `(-pi, pi]` for the pairs 9→10, 19→20, ..., 89→90.
    pub angles: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub angle_sd: f64,
    pub mean_magnitude: f64,
}

pub fn mean_resultant_length(angles: &[f64]) -> f64 {
    let n = angles.len() as f64;
    let c = angles.iter().map(|a| a.cos()).sum::<f64>() / n;
    let s = angles.iter().map(|a| a.sin()).sum::<f64>() / n;
    (c * c + s * s).sqrt()
}

pub fn circular_sd(angles: &[f64]) -> f64 {
    let r = mean_resultant_length(angles).clamp(f64::MIN_POSITIVE, 1.0);
    (-2.0 * r.ln()).sqrt()
}

/// Displacements from each `*9` to its successor `*0` in the embedding.
pub fn boundary_vectors(
    embedding: &Embedding2D,
    dispersion: AngleDispersion,
) -> Result<BoundaryVectorStats> {
    let mut angles = Vec::with_capacity(9);
    let mut magnitudes = Vec::with_capacity(9);
    for k in 0..9 {
        let from = embedding.coord(10 * k + 9)?;
        let to = embedding.coord(10 * k + 10)?;
        let (dx, dy) = (to[0] - from[0], to[1] - from[1]);
        angles.push(dy.atan2(dx));
        magnitudes.push(dx.hypot(dy));
    }
    let angle_sd = match dispersion {
        AngleDispersion::Circular => circular_sd(&angles),
        AngleDispersion::Linear => crate::stats::describe(&angles)?.sd,
    };
    let mean_magnitude = magnitudes.iter().sum::<f64>() / magnitudes.len() as f64;
    Ok(BoundaryVectorStats {
        angles,
        magnitudes,
        angle_sd,
        mean_magnitude,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryComparison {
    /// Count-list angle SD against place-value angle SD (positive t: place-value lower).
    pub angle_sd: TTestResult,
    /// Place-value mean magnitude against count-list (positive t: place-value higher).
    pub magnitude: TTestResult,
}

pub fn mds_geometry_comparison(
    count_list: &[BoundaryVectorStats],
    place_value: &[BoundaryVectorStats],
    tail: Tail,
) -> Result<GeometryComparison> {
    if count_list.len() != place_value.len() {
        return Err(ReprError::SimCountMismatch {
            expected: count_list.len(),
            actual: place_value.len(),
        });
    }
    let sd = |s: &[BoundaryVectorStats]| s.iter().map(|b| b.angle_sd).collect::<Vec<_>>();
    let mag = |s: &[BoundaryVectorStats]| s.iter().map(|b| b.mean_magnitude).collect::<Vec<_>>();
    Ok(GeometryComparison {
        angle_sd: two_sample_t(&sd(count_list), &sd(place_value), tail)?,
        magnitude: two_sample_t(&mag(place_value), &mag(count_list), tail)?,
    })
}

/// An inclusive range of target (successor) values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetRange {
    pub lo: u32,
    pub hi: u32,
}

pub const DEFAULT_RANGES: [TargetRange; 5] = [
    TargetRange { lo: 1, hi: 20 },
    TargetRange { lo: 21, hi: 40 },
    TargetRange { lo: 41, hi: 60 },
    TargetRange { lo: 61, hi: 80 },
    TargetRange { lo: 81, hi: 99 },
];

impl TargetRange {
    /// Inputs whose successor lies in the range.
    pub fn inputs(self) -> std::ops::RangeInclusive<u32> {
        self.lo.saturating_sub(1)..=self.hi.saturating_sub(1)
    }

    pub fn label(self) -> String {
        format!("{}-{}", self.lo, self.hi)
    }
}

/// Pearson correlation between the true successor and the mean predicted
/// successor, per target range. `avg_predictions[n]` is the mean prediction
/// for input `n`. A range with constant predictions yields `None`.
pub fn per_range_correlations(
    avg_predictions: &[f64],
    ranges: &[TargetRange],
) -> Result<Vec<Option<f64>>> {
    ranges
        .iter()
        .map(|r| {
            let mut truth = Vec::new();
            let mut pred = Vec::new();
            for n in r.inputs() {
                let p = *avg_predictions
                    .get(n as usize)
                    .ok_or(ReprError::Missing(n))?;
                truth.push(f64::from(n + 1));
                pred.push(p);
            }
            match pearson_r(&truth, &pred) {
                Ok(r) => Ok(Some(r)),
                Err(StatsError::Constant) => Ok(None),
                Err(e) => Err(e.into()),
            }
        })
        .collect()
}
