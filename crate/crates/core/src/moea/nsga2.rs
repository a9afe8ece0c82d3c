use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::operators::{crossover_two_point, mutate_random_reset, tournament_select};
use super::sort::assign_rank_and_crowding;
use super::Individual;
use crate::error::SearchError;
use crate::evaluators::{evaluate_batch, Evaluator};
use crate::history::{SearchFailure, SearchHistory};
use crate::objective::to_minimization;
use crate::space::{Genotype, SearchSpace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub crossover: f64,
    pub mutation: f64,
    pub generations: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self { population: 50, crossover: 0.9, mutation: 0.02, generations: 300, seed: 0 }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.population < 2 || self.population % 2 != 0 {
            return Err(SearchError::Config(format!("population must be even and at least 2, got {}", self.population)));
        }
        for (name, p) in [("crossover", self.crossover), ("mutation", self.mutation)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SearchError::Config(format!("{name} probability must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    /// Total evaluations performed by [`run_nsga2`].
    pub fn evaluations(&self) -> usize {
        self.population * (self.generations + 1)
    }
}

#[derive(Debug, Clone)]
pub struct Nsga2Outcome {
    pub history: SearchHistory,
    /// Final parent population with rank and crowding from the last
    /// environmental selection.
    pub population: Vec<Individual>,
}

/// Evaluates `genotypes` in parallel and appends the results to `history`
/// in input order. On failure the completed prefix is still appended.
pub fn evaluate_into<E: Evaluator + ?Sized>(
    evaluator: &E,
    genotypes: Vec<Genotype>,
    step: usize,
    history: &mut SearchHistory,
) -> Result<Vec<Individual>, SearchError> {
    let (values, failure) = match evaluate_batch(evaluator, &genotypes) {
        Ok(v) => (v, None),
        Err(f) => {
            let err = SearchError::Evaluation { genotype: genotypes[f.index].to_text(), source: f.error };
            (f.completed, Some(err))
        }
    };
    let mut out = Vec::with_capacity(values.len());
    for (g, v) in genotypes.into_iter().zip(values) {
        let min = to_minimization(evaluator.objectives(), &v);
        history.push(step, g.clone(), v);
        out.push(Individual::new(g, min));
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Elitist truncation of parents ∪ offspring to `n` members, filling
/// whole fronts and breaking the last one by descending crowding.
pub fn select_survivors(mut combined: Vec<Individual>, n: usize) -> Vec<Individual> {
    let fronts = assign_rank_and_crowding(&mut combined);
    let mut keep = Vec::with_capacity(n);
    for mut front in fronts {
        if keep.len() + front.len() <= n {
            keep.extend(front);
        } else {
            front.sort_by(|&a, &b| combined[b].crowding.total_cmp(&combined[a].crowding).then(a.cmp(&b)));
            keep.extend(front.into_iter().take(n - keep.len()));
        }
        if keep.len() == n {
            break;
        }
    }
    keep.sort_unstable();
    let mut slots: Vec<Option<Individual>> = combined.into_iter().map(Some).collect();
    keep.into_iter().map(|i| slots[i].take().expect("index kept once")).collect()
}

fn breed<R: rand::Rng + ?Sized>(space: &SearchSpace, parents: &[Individual], config: &GaConfig, rng: &mut R) -> Vec<Genotype> {
    let mut children = Vec::with_capacity(config.population);
    while children.len() < config.population {
        let a = tournament_select(parents, rng);
        let b = tournament_select(parents, rng);
        let (c, d) = crossover_two_point(space, &parents[a].genotype, &parents[b].genotype, config.crossover, rng);
        children.push(mutate_random_reset(space, &c, config.mutation, rng));
        children.push(mutate_random_reset(space, &d, config.mutation, rng));
    }
    children
}

/// Runs NSGA-II for `generations` generations after a distinct random
/// initial population. Every evaluation is logged with its generation.
pub fn run_nsga2<E: Evaluator + ?Sized>(space: &SearchSpace, evaluator: &E, config: &GaConfig) -> Result<Nsga2Outcome, SearchFailure> {
    let mut history = SearchHistory::new("nsga2", space.id(), evaluator.objectives().to_vec());
    let fail = |error: SearchError, partial: &SearchHistory| SearchFailure { error, partial: partial.clone() };
    config.validate().map_err(|e| fail(e, &history))?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial = space
        .sample_distinct(&mut rng, config.population, &HashSet::new())
        .map_err(|e| fail(e.into(), &history))?;
    let mut population = evaluate_into(evaluator, initial, 0, &mut history).map_err(|e| fail(e, &history))?;
    assign_rank_and_crowding(&mut population);

    for generation in 1..=config.generations {
        let children = breed(space, &population, config, &mut rng);
        let offspring = evaluate_into(evaluator, children, generation, &mut history).map_err(|e| fail(e, &history))?;
        population.extend(offspring);
        population = select_survivors(population, config.population);
    }
    Ok(Nsga2Outcome { history, population })
}
