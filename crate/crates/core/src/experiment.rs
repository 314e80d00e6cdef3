//! Multi-seed experiment orchestration and aggregate statistics.
//!
//! Simulation `i` uses seed `base_seed + i` for its split, initialization and
//! shuffling. Simulations run in parallel; results are collected in seed
//! order, so reports do not depend on scheduling.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{curriculum_stages, MAX_INPUT};
use crate::models::{accuracy_from_predictions, ModelError, ModelKind, TrainedModel};
use crate::repr::{
    boundary_aggregate, boundary_vectors, embed_representations, mean_similarity,
    per_range_correlations, successive_similarities, AngleDispersion, BoundaryVectorStats,
    Embedding2D, MdsPointSet, ReprError, RepresentationSet, SimilarityPoint, TargetRange,
    DEFAULT_RANGES,
};
use crate::stats::{
    describe, ols_fit, two_sample_t, Descriptive, RegressionFit, StatsError, TTestResult, Tail,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Repr(#[from] ReprError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("only {survivors} of {total} simulations finished; need at least 2")]
    TooFewSurvivors { survivors: usize, total: usize },
    #[error("reports are not comparable: {0}")]
    Incomparable(String),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    CountList,
    PlaceValue,
    Curriculum,
}

impl Experiment {
    pub fn model(self) -> ModelKind {
        match self {
            Experiment::CountList => ModelKind::CountList,
            Experiment::PlaceValue | Experiment::Curriculum => ModelKind::PlaceValue,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Experiment::CountList => "count-list",
            Experiment::PlaceValue => "place-value",
            Experiment::Curriculum => "curriculum",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n_sims: usize,
    pub base_seed: u64,
    pub split_fraction: f64,
    /// Overrides the model's default learning rate.
    pub learning_rate: Option<f64>,
    /// Overrides the training length (per stage for the curriculum).
    pub epochs: Option<usize>,
    pub tail: Tail,
    pub mds_point_set: MdsPointSet,
    pub angle_dispersion: AngleDispersion,
    /// 1-based hidden layer feeding the representation analyses; defaults
    /// to the model's last hidden layer.
    pub representation_layer: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            n_sims: 25,
            base_seed: 42,
            split_fraction: 0.8,
            learning_rate: None,
            epochs: None,
            tail: Tail::OneTailed,
            mds_point_set: MdsPointSet::Boundary18,
            angle_dispersion: AngleDispersion::Circular,
            representation_layer: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sims < 2 {
            return Err(ExperimentError::Config(format!(
                "n_sims must be at least 2, got {}",
                self.n_sims
            )));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(ExperimentError::Config(format!(
                "split_fraction must lie in (0, 1), got {}",
                self.split_fraction
            )));
        }
        if let Some(lr) = self.learning_rate {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(ExperimentError::Config(format!(
                    "learning rate must be positive, got {lr}"
                )));
            }
        }
        if self.epochs == Some(0) {
            return Err(ExperimentError::Config("epochs must be positive".into()));
        }
        let hidden = self.experiment.model().hidden_layers();
        if let Some(layer) = self.representation_layer {
            if layer == 0 || layer > hidden {
                return Err(ExperimentError::Config(format!(
                    "representation layer {layer} outside 1..={hidden}"
                )));
            }
        }
        Ok(())
    }

    fn resolve(&self) -> ResolvedConfig {
        let model = self.experiment.model();
        let epochs = self.epochs.unwrap_or(match self.experiment {
            Experiment::Curriculum => curriculum_stages().stages[0].epochs,
            _ => model.epochs(),
        });
        ResolvedConfig {
            experiment: self.experiment,
            model,
            n_sims: self.n_sims,
            base_seed: self.base_seed,
            split_fraction: self.split_fraction,
            learning_rate: self
                .learning_rate
                .unwrap_or_else(|| model.default_learning_rate()),
            epochs,
            tail: self.tail,
            mds_point_set: self.mds_point_set,
            angle_dispersion: self.angle_dispersion,
            representation_layer: self
                .representation_layer
                .unwrap_or_else(|| model.default_representation_layer()),
        }
    }
}

/// The configuration with every default filled in, as recorded in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub experiment: Experiment,
    pub model: ModelKind,
    pub n_sims: usize,
    pub base_seed: u64,
    pub split_fraction: f64,
    pub learning_rate: f64,
    /// Total epochs for standard runs; epochs per stage for the curriculum.
    pub epochs: usize,
    pub tail: Tail,
    pub mds_point_set: MdsPointSet,
    pub angle_dispersion: AngleDispersion,
    pub representation_layer: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub stage_index: u32,
    pub domain_max: u32,
    pub epochs: usize,
    /// Accuracy on the train-split pairs seen in this stage.
    pub train_accuracy: f64,
    /// Predicted successor for every input in `[0, domain_max]`.
    pub predictions: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub seed: u64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub train_inputs: Vec<u32>,
    /// Predicted successor for inputs `0..=98`.
    pub predictions: Vec<u32>,
    pub loss_history: Vec<f64>,
    pub representation_layer: usize,
    pub representations: Vec<Vec<f64>>,
    pub similarities: Vec<SimilarityPoint>,
    pub mean_similarity: f64,
    pub boundary_similarity: f64,
    pub nonboundary_similarity: f64,
    pub embedding: Embedding2D,
    pub boundary_vectors: BoundaryVectorStats,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<StageResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedSimulation {
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub train: Descriptive,
    pub test: Descriptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub n: u32,
    pub mean: Option<f64>,
    pub defined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySummary {
    /// Mean cosine per number across simulations.
    pub profile: Vec<ProfilePoint>,
    pub per_sim_mean: Descriptive,
    pub boundary: Descriptive,
    pub nonboundary: Descriptive,
    /// Non-boundary against boundary means (positive t: dip at boundaries).
    pub boundary_test: TTestResult,
    /// Cosines dropped because a representation was the zero vector.
    pub undefined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub angle_sd: Descriptive,
    pub mean_magnitude: Descriptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage_index: u32,
    pub domain_max: u32,
    pub train_accuracy: Descriptive,
    /// Cross-simulation mean prediction for inputs `0..=domain_max`.
    pub mean_predictions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumSummary {
    pub ranges: Vec<TargetRange>,
    pub stages: Vec<StageSummary>,
    /// `correlations[stage][range]`; `None` where the range is not yet
    /// trained or the mean predictions are constant.
    pub correlations: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ResolvedConfig,
    pub simulations: Vec<SimulationResult>,
    pub excluded: Vec<ExcludedSimulation>,
    pub accuracy: AccuracySummary,
    /// Cross-simulation mean prediction per input `0..=98`.
    pub mean_predictions: Vec<f64>,
    /// Correct successor regressed on the mean predicted successor.
    pub regression: RegressionFit,
    /// Every simulation's predictions regressed on the correct successor.
    pub regression_pooled: RegressionFit,
    pub similarity: SimilaritySummary,
    pub geometry: GeometrySummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curriculum: Option<CurriculumSummary>,
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    match config.experiment {
        Experiment::Curriculum => run_curriculum(config),
        e => run_standard(config, e.model()),
    }
}

/// Count-list or place-value protocol: train on the split, evaluate, analyze.
pub fn run_standard(config: &ExperimentConfig, kind: ModelKind) -> Result<ExperimentReport> {
    config.validate()?;
    if config.experiment == Experiment::Curriculum || config.experiment.model() != kind {
        return Err(ExperimentError::Config(format!(
            "experiment {:?} does not run the {} model",
            config.experiment,
            kind.label()
        )));
    }
    let resolved = config.resolve();
    let outcomes = run_seeds(&resolved, |seed| {
        let mut model = build_model(&resolved, seed)?;
        let history = model.fit()?;
        finish_simulation(&resolved, &model, history, Vec::new())
    });
    assemble(resolved, outcomes)
}

/// Expanding-range training of the place-value model over the six stages.
pub fn run_curriculum(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    if config.experiment != Experiment::Curriculum {
        return Err(ExperimentError::Config(
            "run_curriculum needs the curriculum experiment".into(),
        ));
    }
    let resolved = config.resolve();
    let schedule = curriculum_stages();
    let outcomes = run_seeds(&resolved, |seed| {
        let mut model = build_model(&resolved, seed)?;
        let mut history = Vec::new();
        let mut stages = Vec::with_capacity(schedule.stages.len());
        for stage in &schedule.stages {
            let pairs = model.split.train_up_to(stage.domain_max);
            let mut train_config = model.config;
            train_config.epochs = resolved.epochs;
            train_config.seed = seed.wrapping_add(u64::from(stage.stage_index) << 32);
            history.extend(model.fit_on(&pairs, &train_config)?);
            let predictions = (0..=stage.domain_max)
                .map(|n| model.predict_successor(n))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            stages.push(StageResult {
                stage_index: stage.stage_index,
                domain_max: stage.domain_max,
                epochs: resolved.epochs,
                train_accuracy: model.exact_match_accuracy(&pairs)?,
                predictions,
            });
        }
        finish_simulation(&resolved, &model, history, stages)
    });
    let mut report = assemble(resolved, outcomes)?;
    report.curriculum = Some(curriculum_summary(&report.simulations)?);
    Ok(report)
}

fn build_model(config: &ResolvedConfig, seed: u64) -> Result<TrainedModel> {
    let mut model = TrainedModel::with_fraction(config.model, seed, config.split_fraction)?;
    model.config.learning_rate = config.learning_rate;
    model.config.epochs = config.epochs;
    Ok(model)
}

fn run_seeds<F>(config: &ResolvedConfig, simulate: F) -> Vec<(u64, Result<SimulationResult>)>
where
    F: Fn(u64) -> Result<SimulationResult> + Sync,
{
    (0..config.n_sims as u64)
        .into_par_iter()
        .map(|i| {
            let seed = config.base_seed.wrapping_add(i);
            (seed, simulate(seed))
        })
        .collect()
}

fn finish_simulation(
    config: &ResolvedConfig,
    model: &TrainedModel,
    loss_history: Vec<f64>,
    stages: Vec<StageResult>,
) -> Result<SimulationResult> {
    let seed = model.split.seed;
    let predictions = model.predict_all()?;
    let correct: Vec<u32> = (1..=MAX_INPUT + 1).collect();
    let train_inputs = model.split.train_inputs();
    let pick = |inputs: &[u32]| -> (Vec<u32>, Vec<u32>) {
        inputs
            .iter()
            .map(|&n| (predictions[n as usize], correct[n as usize]))
            .unzip()
    };
    let (train_pred, train_true) = pick(&train_inputs);
    let (test_pred, test_true) = pick(&model.split.test_inputs());

    let reps = RepresentationSet {
        vectors: model.representations(config.representation_layer)?,
        layer: config.representation_layer,
        seed,
    };
    let similarities = successive_similarities(&reps)?;
    let agg = boundary_aggregate(std::slice::from_ref(&similarities))?;
    let mean_sim = mean_similarity(&similarities).ok_or(ReprError::EmptyGroup("similarity"))?;
    let embedding = embed_representations(&reps, config.mds_point_set)?;
    let vectors = boundary_vectors(&embedding, config.angle_dispersion)?;

    Ok(SimulationResult {
        seed,
        train_accuracy: accuracy_from_predictions(&train_pred, &train_true),
        test_accuracy: accuracy_from_predictions(&test_pred, &test_true),
        train_inputs,
        predictions,
        loss_history,
        representation_layer: reps.layer,
        representations: reps.vectors,
        similarities,
        mean_similarity: mean_sim,
        boundary_similarity: agg.boundary_means[0],
        nonboundary_similarity: agg.nonboundary_means[0],
        embedding,
        boundary_vectors: vectors,
        stages,
    })
}

fn column<T>(sims: &[SimulationResult], f: impl Fn(&SimulationResult) -> T) -> Vec<T> {
    sims.iter().map(f).collect()
}

fn mean_predictions(rows: &[&[u32]]) -> Vec<f64> {
    let width = rows.first().map_or(0, |r| r.len());
    (0..width)
        .map(|n| rows.iter().map(|r| f64::from(r[n])).sum::<f64>() / rows.len() as f64)
        .collect()
}

fn assemble(
    config: ResolvedConfig,
    outcomes: Vec<(u64, Result<SimulationResult>)>,
) -> Result<ExperimentReport> {
    let total = outcomes.len();
    let mut simulations = Vec::with_capacity(total);
    let mut excluded = Vec::new();
    for (seed, outcome) in outcomes {
        match outcome {
            Ok(sim) => simulations.push(sim),
            Err(e) => {
                warn!("simulation with seed {seed} excluded: {e}");
                excluded.push(ExcludedSimulation {
                    seed,
                    reason: e.to_string(),
                });
            }
        }
    }
    if simulations.len() < 2 {
        return Err(ExperimentError::TooFewSurvivors {
            survivors: simulations.len(),
            total,
        });
    }
    if !excluded.is_empty() {
        warn!(
            "aggregates use {} of {} simulations",
            simulations.len(),
            total
        );
    }

    let accuracy = AccuracySummary {
        train: describe(&column(&simulations, |s| s.train_accuracy))?,
        test: describe(&column(&simulations, |s| s.test_accuracy))?,
    };

    let rows: Vec<&[u32]> = simulations
        .iter()
        .map(|s| s.predictions.as_slice())
        .collect();
    let mean_preds = mean_predictions(&rows);
    let correct: Vec<f64> = (1..=MAX_INPUT + 1).map(f64::from).collect();
    let regression = ols_fit(&mean_preds, &correct)?;
    let pooled_x: Vec<f64> = simulations
        .iter()
        .flat_map(|_| correct.iter().copied())
        .collect();
    let pooled_y: Vec<f64> = rows
        .iter()
        .flat_map(|r| r.iter().map(|&p| f64::from(p)))
        .collect();
    let regression_pooled = ols_fit(&pooled_x, &pooled_y)?;

    let similarity = similarity_summary(&simulations, config.tail)?;
    let geometry = GeometrySummary {
        angle_sd: describe(&column(&simulations, |s| s.boundary_vectors.angle_sd))?,
        mean_magnitude: describe(&column(&simulations, |s| s.boundary_vectors.mean_magnitude))?,
    };

    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config,
        simulations,
        excluded,
        accuracy,
        mean_predictions: mean_preds,
        regression,
        regression_pooled,
        similarity,
        geometry,
        curriculum: None,
    })
}

fn similarity_summary(sims: &[SimulationResult], tail: Tail) -> Result<SimilaritySummary> {
    let len = sims.iter().map(|s| s.similarities.len()).min().unwrap_or(0);
    let profile = (0..len)
        .map(|i| {
            let defined: Vec<f64> = sims
                .iter()
                .filter_map(|s| s.similarities[i].cosine)
                .collect();
            ProfilePoint {
                n: sims[0].similarities[i].n,
                mean: (!defined.is_empty())
                    .then(|| defined.iter().sum::<f64>() / defined.len() as f64),
                defined: defined.len(),
            }
        })
        .collect();
    let undefined = sims
        .iter()
        .flat_map(|s| &s.similarities)
        .filter(|p| p.cosine.is_none())
        .count();
    if undefined > 0 {
        warn!("{undefined} successive similarities undefined (zero representation)");
    }
    let boundary = column(sims, |s| s.boundary_similarity);
    let nonboundary = column(sims, |s| s.nonboundary_similarity);
    Ok(SimilaritySummary {
        profile,
        per_sim_mean: describe(&column(sims, |s| s.mean_similarity))?,
        boundary: describe(&boundary)?,
        nonboundary: describe(&nonboundary)?,
        boundary_test: two_sample_t(&nonboundary, &boundary, tail)?,
        undefined,
    })
}

fn curriculum_summary(sims: &[SimulationResult]) -> Result<CurriculumSummary> {
    let schedule = curriculum_stages();
    let mut stages = Vec::with_capacity(schedule.stages.len());
    let mut correlations = Vec::with_capacity(schedule.stages.len());
    for (k, stage) in schedule.stages.iter().enumerate() {
        let rows: Vec<&[u32]> = sims
            .iter()
            .map(|s| s.stages[k].predictions.as_slice())
            .collect();
        let mean_preds = mean_predictions(&rows);
        let mut row = Vec::with_capacity(DEFAULT_RANGES.len());
        for range in DEFAULT_RANGES {
            let trained = range.hi - 1 <= stage.domain_max;
            row.push(if trained {
                per_range_correlations(&mean_preds, &[range])?[0]
            } else {
                None
            });
        }
        correlations.push(row);
        stages.push(StageSummary {
            stage_index: stage.stage_index,
            domain_max: stage.domain_max,
            train_accuracy: describe(&column(sims, |s| s.stages[k].train_accuracy))?,
            mean_predictions: mean_preds,
        });
    }
    Ok(CurriculumSummary {
        ranges: DEFAULT_RANGES.to_vec(),
        stages,
        correlations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    /// Place-value against count-list per-simulation mean similarity.
    pub similarity: TTestResult,
    /// Count-list against place-value angle dispersion.
    pub angle_sd: TTestResult,
    /// Place-value against count-list mean boundary-vector magnitude.
    pub magnitude: TTestResult,
}

/// Cross-model t-tests, each oriented so that a positive t is the direction
/// in which the place-value model is more structured.
pub fn compare_models(
    count_list: &ExperimentReport,
    place_value: &ExperimentReport,
    tail: Tail,
) -> Result<ModelComparison> {
    if count_list.config.model != ModelKind::CountList
        || place_value.config.model != ModelKind::PlaceValue
    {
        return Err(ExperimentError::Incomparable(
            "expected a count-list report and a place-value report".into(),
        ));
    }
    let (a, b) = (&count_list.simulations, &place_value.simulations);
    if a.len() != b.len() {
        return Err(ExperimentError::Incomparable(format!(
            "{} vs {} simulations",
            a.len(),
            b.len()
        )));
    }
    Ok(ModelComparison {
        similarity: two_sample_t(
            &column(b, |s| s.mean_similarity),
            &column(a, |s| s.mean_similarity),
            tail,
        )?,
        angle_sd: two_sample_t(
            &column(a, |s| s.boundary_vectors.angle_sd),
            &column(b, |s| s.boundary_vectors.angle_sd),
            tail,
        )?,
        magnitude: two_sample_t(
            &column(b, |s| s.boundary_vectors.mean_magnitude),
            &column(a, |s| s.boundary_vectors.mean_magnitude),
            tail,
        )?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke(experiment: Experiment, epochs: usize) -> ExperimentConfig {
        ExperimentConfig {
            n_sims: 2,
            epochs: Some(epochs),
            ..ExperimentConfig::new(experiment)
        }
    }

    #[test]
    fn smoke_run_is_well_formed() {
        let report = run(&smoke(Experiment::PlaceValue, 3)).unwrap();
        assert_eq!(report.simulations.len(), 2);
        assert_eq!(report.simulations[0].seed, 42);
        assert_eq!(report.simulations[1].seed, 43);
        assert_eq!(report.config.learning_rate, 0.003);
        assert_eq!(report.config.representation_layer, 3);
        for s in &report.simulations {
            assert_eq!(s.predictions.len(), 99);
            assert_eq!(s.loss_history.len(), 3);
            assert_eq!(s.representations.len(), 100);
            assert_eq!(s.similarities.len(), 99);
            assert_eq!(s.boundary_vectors.angles.len(), 9);
            assert!((0.0..=1.0).contains(&s.train_accuracy));
        }
        assert_eq!(report.mean_predictions.len(), 99);
        assert_eq!(report.regression.n, 99);
        assert_eq!(report.regression_pooled.n, 198);
        assert_eq!(report.similarity.boundary_test.df, 2);
        assert!(report.curriculum.is_none());
    }

    #[test]
    fn count_list_smoke_uses_single_hidden_layer() {
        let report = run(&smoke(Experiment::CountList, 2)).unwrap();
        assert_eq!(report.config.representation_layer, 1);
        assert_eq!(report.simulations[0].representations.len(), 99);
        assert_eq!(report.simulations[0].similarities.len(), 98);
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::new(Experiment::CountList);
        c.n_sims = 1;
        assert!(matches!(run(&c), Err(ExperimentError::Config(_))));
        c.n_sims = 2;
        c.split_fraction = 1.0;
        assert!(matches!(run(&c), Err(ExperimentError::Config(_))));
        c.split_fraction = 0.8;
        c.representation_layer = Some(2);
        assert!(matches!(run(&c), Err(ExperimentError::Config(_))));
        c.representation_layer = None;
        c.learning_rate = Some(-1.0);
        assert!(matches!(run(&c), Err(ExperimentError::Config(_))));
        let c = ExperimentConfig::new(Experiment::Curriculum);
        assert!(run_standard(&c, ModelKind::PlaceValue).is_err());
        assert!(run_curriculum(&ExperimentConfig::new(Experiment::PlaceValue)).is_err());
    }

    #[test]
    fn curriculum_smoke() {
        let report = run(&smoke(Experiment::Curriculum, 2)).unwrap();
        let cur = report.curriculum.as_ref().unwrap();
        assert_eq!(cur.correlations.len(), 6);
        assert!(cur.correlations.iter().all(|r| r.len() == 5));
        // stage 1 has only the first range trained
        assert!(cur.correlations[0][1..].iter().all(Option::is_none));
        for s in &report.simulations {
            assert_eq!(s.stages.len(), 6);
            assert_eq!(s.loss_history.len(), 12);
            assert_eq!(s.stages[0].predictions.len(), 20);
            assert_eq!(s.stages[5].predictions.len(), 99);
        }
    }

    #[test]
    fn divergent_simulations_are_excluded() {
        let mut c = smoke(Experiment::PlaceValue, 200);
        c.n_sims = 3;
        c.learning_rate = Some(1e9);
        assert!(matches!(
            run(&c),
            Err(ExperimentError::TooFewSurvivors {
                survivors: 0,
                total: 3
            })
        ));
    }

    #[test]
    fn identical_reports_compare_to_zero() {
        let cl = run(&smoke(Experiment::CountList, 2)).unwrap();
        let mut pv = cl.clone();
        pv.config.model = ModelKind::PlaceValue;
        let c = compare_models(&cl, &pv, Tail::OneTailed).unwrap();
        for t in [c.similarity, c.angle_sd, c.magnitude] {
            assert_eq!((t.t, t.p, t.df), (0.0, 0.5, 2));
        }
        assert!(compare_models(&pv, &cl, Tail::OneTailed).is_err());
        let mut short = pv.clone();
        short.simulations.pop();
        assert!(compare_models(&cl, &short, Tail::OneTailed).is_err());
    }
}
