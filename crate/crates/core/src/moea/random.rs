use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::nsga2::evaluate_into;
use crate::evaluators::Evaluator;
use crate::history::{SearchFailure, SearchHistory};
use crate::space::SearchSpace;

/// Evaluates `budget` distinct random genotypes.
pub fn random_search<E: Evaluator + ?Sized>(space: &SearchSpace, evaluator: &E, budget: usize, seed: u64) -> Result<SearchHistory, SearchFailure> {
    let mut history = SearchHistory::new("random", space.id(), evaluator.objectives().to_vec());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let genotypes = match space.sample_distinct(&mut rng, budget, &HashSet::new()) {
        Ok(g) => g,
        Err(e) => return Err(SearchFailure { error: e.into(), partial: history }),
    };
    match evaluate_into(evaluator, genotypes, 0, &mut history) {
        Ok(_) => Ok(history),
        Err(error) => Err(SearchFailure { error, partial: history }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluators::SyntheticOracle;
    use crate::moea::{run_nsga2, GaConfig};
    use crate::space::SpaceKind;

    #[test]
    fn distinct_and_shares_initial_population_with_nsga2() {
        let space = SpaceKind::Transformer.space();
        let oracle = SyntheticOracle::new(SpaceKind::Transformer);
        let h = random_search(&space, &oracle, 200, 9).unwrap();
        let unique: HashSet<_> = h.records.iter().map(|r| r.genotype.clone()).collect();
        assert_eq!(unique.len(), 200);
        let ga = run_nsga2(&space, &oracle, &GaConfig { population: 50, generations: 1, seed: 9, ..GaConfig::default() }).unwrap();
        assert_eq!(&ga.history.records[..50], &h.records[..50]);
    }
}
