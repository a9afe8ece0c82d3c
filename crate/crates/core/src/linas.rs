//! Predictor-guided search: validate a population on the true evaluator,
//! fit one regressor per objective on everything validated so far, run
//! NSGA-II against the regressors, and validate the best unseen designs
//! it found.

use std::collections::HashSet;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SearchError;
use crate::evaluators::{EvalError, Evaluator};
use crate::history::{SearchFailure, SearchHistory};
use crate::metrics::hypervolume_2d;
use crate::moea::{assign_rank_and_crowding, evaluate_into, run_nsga2, GaConfig, Individual, Nsga2Outcome};
use crate::objective::{directions, Objective};
use crate::predictors::{Dataset, PredictorError, PredictorKind, PredictorModel, PredictorParams};
use crate::space::{Genotype, SearchSpace, SpaceError, SpaceKind};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinasConfig {
    /// Designs validated per iteration (n); also the inner GA population.
    pub population: usize,
    /// Outer iterations (I).
    pub iterations: usize,
    /// Inner GA generations per iteration (J).
    pub generations: usize,
    pub crossover: f64,
    pub mutation: f64,
    /// One regressor kind per objective, in objective order.
    pub predictors: Vec<PredictorKind>,
    pub predictor_params: PredictorParams,
    pub seed: u64,
    /// When set, hypervolume is reported after every iteration.
    pub reference: Option<Vec<f64>>,
}

impl LinasConfig {
    pub fn for_space(kind: SpaceKind) -> Self {
        let predictors = match kind {
            SpaceKind::Transformer => vec![PredictorKind::Svr, PredictorKind::Ridge],
            SpaceKind::MobileNetV3 => vec![PredictorKind::Ridge, PredictorKind::Ridge],
        };
        Self {
            population: 50,
            iterations: 10,
            generations: 300,
            crossover: 0.9,
            mutation: 0.02,
            predictors,
            predictor_params: PredictorParams::default(),
            seed: 0,
            reference: Some(kind.reference_point()),
        }
    }

    pub fn inner_ga(&self, seed: u64) -> GaConfig {
        GaConfig {
            population: self.population,
            crossover: self.crossover,
            mutation: self.mutation,
            generations: self.generations,
            seed,
        }
    }

    pub fn validate(&self, objectives: &[Objective]) -> Result<(), SearchError> {
        self.inner_ga(0).validate()?;
        if self.iterations == 0 {
            return Err(SearchError::Config("iterations must be at least 1".into()));
        }
        if self.predictors.len() != objectives.len() {
            return Err(SearchError::Config(format!(
                "{} predictor kinds for {} objectives",
                self.predictors.len(),
                objectives.len()
            )));
        }
        if self.generations <= 200 {
            warn!("inner GA runs only {} generations; it may not converge (300 recommended)", self.generations);
        }
        Ok(())
    }

    pub fn true_evaluations(&self) -> usize {
        self.population * self.iterations
    }
}

/// How an iteration's population was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationSource {
    Uniform,
    Predicted,
    /// Predictor training or the inner search failed; sampled uniformly.
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub evaluations: usize,
    pub source: PopulationSource,
    /// Surrogate evaluations spent by the inner search.
    pub inner_evaluations: usize,
    /// Candidates taken from the inner population before backfilling.
    pub selected: usize,
    pub hypervolume: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinasState {
    pub dataset: Dataset,
    /// Models fitted on `dataset` after the last completed iteration.
    pub predictors: Vec<PredictorModel>,
    pub iteration: usize,
    #[serde(skip)]
    validated: HashSet<Genotype>,
}

impl LinasState {
    fn new(objectives: Vec<Objective>) -> Self {
        Self { dataset: Dataset::new(objectives), predictors: Vec::new(), iteration: 0, validated: HashSet::new() }
    }

    pub fn validated(&self) -> &HashSet<Genotype> {
        &self.validated
    }

    fn rebuild(&mut self) -> Result<(), PredictorError> {
        self.dataset.reindex()?;
        self.validated = self.dataset.genotypes().cloned().collect();
        Ok(())
    }
}

/// Fits one model per objective on every validated row.
pub fn train_iteration_predictors(
    space: &SearchSpace,
    dataset: &Dataset,
    kinds: &[PredictorKind],
    params: &PredictorParams,
) -> Result<Vec<PredictorModel>, PredictorError> {
    let features = dataset.features(space)?;
    dataset
        .objectives()
        .iter()
        .zip(kinds)
        .enumerate()
        .map(|(k, (objective, &kind))| {
            PredictorModel::train(kind, params, &features, &dataset.targets(k), &objective.name, space.id())
        })
        .collect()
}

/// Regressors behind the [`Evaluator`] interface, so the inner GA sees
/// them exactly as it would see the true evaluator.
pub struct PredictorEvaluator<'a> {
    space: &'a SearchSpace,
    objectives: Vec<Objective>,
    models: &'a [PredictorModel],
}

impl<'a> PredictorEvaluator<'a> {
    pub fn new(space: &'a SearchSpace, objectives: Vec<Objective>, models: &'a [PredictorModel]) -> Self {
        Self { space, objectives, models }
    }
}

impl Evaluator for PredictorEvaluator<'_> {
    fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    fn evaluate(&self, genotype: &Genotype) -> Result<Vec<f64>, EvalError> {
        let row = self.space.one_hot_encode(genotype)?;
        self.models
            .iter()
            .map(|m| {
                m.predict_row(&row)
                    .map_err(|e| EvalError::InvalidValues { genotype: genotype.to_text(), reason: e.to_string() })
            })
            .collect()
    }
}

/// Runs the inner GA against `surrogate`. No true evaluations happen here.
pub fn inner_search<E: Evaluator + ?Sized>(space: &SearchSpace, surrogate: &E, ga: &GaConfig) -> Result<Nsga2Outcome, SearchFailure> {
    run_nsga2(space, surrogate, ga)
}

/// Picks `n` distinct, not yet validated genotypes from the inner
/// population by rank then crowding (recomputed after filtering), and
/// fills any shortfall with uniform samples. Returns the genotypes and
/// how many came from the inner population.
pub fn select_next_population<R: Rng + ?Sized>(
    space: &SearchSpace,
    inner: &[Individual],
    validated: &HashSet<Genotype>,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<Genotype>, usize), SpaceError> {
    let mut seen = HashSet::new();
    let mut candidates: Vec<Individual> = inner
        .iter()
        .filter(|ind| !validated.contains(&ind.genotype) && seen.insert(ind.genotype.clone()))
        .cloned()
        .collect();
    assign_rank_and_crowding(&mut candidates);
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&candidates[a], &candidates[b]);
        x.rank.cmp(&y.rank).then(y.crowding.total_cmp(&x.crowding)).then(a.cmp(&b))
    });
    let mut chosen: Vec<Genotype> = order.into_iter().take(n).map(|i| candidates[i].genotype.clone()).collect();
    let selected = chosen.len();
    if selected < n {
        let mut exclude = validated.clone();
        exclude.extend(chosen.iter().cloned());
        chosen.extend(space.sample_distinct(rng, n - selected, &exclude)?);
    }
    Ok((chosen, selected))
}

/// Everything needed to continue an interrupted run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinasCheckpoint {
    pub version: u32,
    pub space_id: String,
    pub config: LinasConfig,
    pub state: LinasState,
    pub history: SearchHistory,
    pub progress: Vec<IterationReport>,
    pub inner_populations: Vec<Vec<Individual>>,
    rng: ChaCha8Rng,
}

impl LinasCheckpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SearchError> {
        let cp: Self = serde_json::from_str(text).map_err(|e| SearchError::Checkpoint(e.to_string()))?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(SearchError::Checkpoint(format!("unsupported checkpoint version {}", cp.version)));
        }
        Ok(cp)
    }
}

#[derive(Debug, Clone)]
pub struct LinasOutcome {
    pub history: SearchHistory,
    pub state: LinasState,
    pub progress: Vec<IterationReport>,
    /// Final inner GA population of every predicted iteration.
    pub inner_populations: Vec<Vec<Individual>>,
}

pub struct LinasRun<'a> {
    space: &'a SearchSpace,
    evaluator: &'a dyn Evaluator,
    surrogate: Option<&'a dyn Evaluator>,
    config: LinasConfig,
    state: LinasState,
    history: SearchHistory,
    progress: Vec<IterationReport>,
    inner_populations: Vec<Vec<Individual>>,
    rng: ChaCha8Rng,
}

impl<'a> LinasRun<'a> {
    pub fn new(space: &'a SearchSpace, evaluator: &'a dyn Evaluator, config: LinasConfig) -> Result<Self, SearchError> {
        let objectives = evaluator.objectives().to_vec();
        config.validate(&objectives)?;
        Ok(Self {
            space,
            evaluator,
            surrogate: None,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            state: LinasState::new(objectives.clone()),
            history: SearchHistory::new("linas", space.id(), objectives),
            progress: Vec::new(),
            inner_populations: Vec::new(),
            config,
        })
    }

    /// Replaces the trained regressors with a fixed surrogate for the
    /// inner search. Models are then not trained at all.
    pub fn with_surrogate(mut self, surrogate: &'a dyn Evaluator) -> Self {
        self.surrogate = Some(surrogate);
        self
    }

    pub fn resume(space: &'a SearchSpace, evaluator: &'a dyn Evaluator, checkpoint: LinasCheckpoint) -> Result<Self, SearchError> {
        if checkpoint.space_id != space.id() {
            return Err(SearchError::Checkpoint(format!(
                "checkpoint is for space `{}`, not `{}`",
                checkpoint.space_id,
                space.id()
            )));
        }
        if checkpoint.history.objectives != evaluator.objectives() {
            return Err(SearchError::Checkpoint("evaluator objectives differ from the checkpoint".into()));
        }
        let mut state = checkpoint.state;
        state.rebuild()?;
        Ok(Self {
            space,
            evaluator,
            surrogate: None,
            config: checkpoint.config,
            state,
            history: checkpoint.history,
            progress: checkpoint.progress,
            inner_populations: checkpoint.inner_populations,
            rng: checkpoint.rng,
        })
    }

    pub fn checkpoint(&self) -> LinasCheckpoint {
        LinasCheckpoint {
            version: CHECKPOINT_VERSION,
            space_id: self.space.id().to_string(),
            config: self.config.clone(),
            state: self.state.clone(),
            history: self.history.clone(),
            progress: self.progress.clone(),
            inner_populations: self.inner_populations.clone(),
            rng: self.rng.clone(),
        }
    }

    pub fn config(&self) -> &LinasConfig {
        &self.config
    }

    pub fn state(&self) -> &LinasState {
        &self.state
    }

    pub fn history(&self) -> &SearchHistory {
        &self.history
    }

    pub fn progress(&self) -> &[IterationReport] {
        &self.progress
    }

    pub fn is_finished(&self) -> bool {
        self.state.iteration >= self.config.iterations
    }

    fn propose(&mut self) -> Result<(Vec<Genotype>, PopulationSource, usize, usize), SearchError> {
        let n = self.config.population;
        if self.state.iteration == 0 {
            let g = self.space.sample_distinct(&mut self.rng, n, &self.state.validated)?;
            return Ok((g, PopulationSource::Uniform, 0, 0));
        }
        let ga = self.config.inner_ga(self.rng.random());
        let objectives = self.evaluator.objectives().to_vec();
        let inner = match self.surrogate {
            Some(s) => Some(inner_search(self.space, s, &ga)),
            None if self.state.predictors.len() == objectives.len() => {
                let models = PredictorEvaluator::new(self.space, objectives, &self.state.predictors);
                Some(inner_search(self.space, &models, &ga))
            }
            None => None,
        };
        match inner {
            Some(Ok(outcome)) => {
                let (g, selected) =
                    select_next_population(self.space, &outcome.population, &self.state.validated, n, &mut self.rng)?;
                let spent = outcome.history.len();
                self.inner_populations.push(outcome.population);
                Ok((g, PopulationSource::Predicted, spent, selected))
            }
            other => {
                if let Some(Err(f)) = other {
                    warn!("iteration {}: inner search failed ({}); sampling uniformly", self.state.iteration, f.error);
                }
                let g = self.space.sample_distinct(&mut self.rng, n, &self.state.validated)?;
                Ok((g, PopulationSource::Fallback, 0, 0))
            }
        }
    }

    /// Runs one outer iteration. Returns `None` once all iterations are
    /// done. On an evaluator failure the rows validated before it stay in
    /// the history and dataset.
    pub fn step(&mut self) -> Result<Option<IterationReport>, SearchError> {
        if self.is_finished() {
            return Ok(None);
        }
        let iteration = self.state.iteration;
        let (population, source, inner_evaluations, selected) = self.propose()?;

        let before = self.history.len();
        let result = evaluate_into(self.evaluator, population, iteration, &mut self.history);
        for rec in &self.history.records[before..] {
            self.state.dataset.push(rec.genotype.clone(), rec.values.clone())?;
            self.state.validated.insert(rec.genotype.clone());
        }
        result?;

        if self.surrogate.is_none() {
            match train_iteration_predictors(self.space, &self.state.dataset, &self.config.predictors, &self.config.predictor_params) {
                Ok(models) => self.state.predictors = models,
                Err(e) => {
                    warn!("iteration {iteration}: predictor training failed ({e}); next population will be uniform");
                    self.state.predictors.clear();
                }
            }
        }
        self.state.iteration += 1;

        let hypervolume = match &self.config.reference {
            Some(r) => Some(hypervolume_2d(&self.history.points(), r, &directions(&self.history.objectives))?),
            None => None,
        };
        let report = IterationReport {
            iteration,
            evaluations: self.history.len(),
            source,
            inner_evaluations,
            selected,
            hypervolume,
        };
        info!(
            "linas iteration {iteration}: {} evaluations, {:?}, hv {:?}",
            report.evaluations, source, hypervolume
        );
        self.progress.push(report.clone());
        Ok(Some(report))
    }

    pub fn run(mut self) -> Result<LinasOutcome, SearchFailure> {
        loop {
            match self.step() {
                Ok(Some(_)) => {}
                Ok(None) => break,
                Err(error) => return Err(SearchFailure { error, partial: self.history }),
            }
        }
        Ok(LinasOutcome {
            history: self.history,
            state: self.state,
            progress: self.progress,
            inner_populations: self.inner_populations,
        })
    }
}

/// Convenience wrapper around [`LinasRun`].
pub fn run_linas(space: &SearchSpace, evaluator: &dyn Evaluator, config: LinasConfig) -> Result<LinasOutcome, SearchFailure> {
    let run = LinasRun::new(space, evaluator, config).map_err(|error| SearchFailure {
        error,
        partial: SearchHistory::new("linas", space.id(), evaluator.objectives().to_vec()),
    })?;
    run.run()
}
