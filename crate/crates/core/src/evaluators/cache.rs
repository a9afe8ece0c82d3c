use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use super::{EvalError, Evaluator};
use crate::objective::Objective;
use crate::space::Genotype;

/// Memoizes a pure evaluator by canonical genotype.
pub struct Cached<E> {
    inner: E,
    memo: RwLock<HashMap<Genotype, Vec<f64>>>,
    hits: AtomicU64,
    misses: AtomicU64,
    inner_calls: AtomicU64,
}

impl<E: Evaluator> Cached<E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            memo: RwLock::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            inner_calls: AtomicU64::new(0),
        }
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn inner_calls(&self) -> u64 {
        self.inner_calls.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.memo.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<E: Evaluator> Evaluator for Cached<E> {
    fn objectives(&self) -> &[Objective] {
        self.inner.objectives()
    }

    fn evaluate(&self, genotype: &Genotype) -> Result<Vec<f64>, EvalError> {
        if let Some(v) = self.memo.read().expect("cache lock").get(genotype) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v.clone());
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        self.inner_calls.fetch_add(1, Ordering::Relaxed);
        let values = self.inner.evaluate(genotype)?;
        // First insertion wins if two threads raced on the same key.
        let mut memo = self.memo.write().expect("cache lock");
        Ok(memo.entry(genotype.clone()).or_insert(values).clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluators::{Counted, SyntheticOracle, TabularOracle};
    use crate::space::SpaceKind;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn repeats_hit_the_cache() {
        let cached = Cached::new(Counted::new(SyntheticOracle::new(SpaceKind::Transformer)));
        let g = Genotype::new(vec![0; 40]);
        let a = cached.evaluate(&g).unwrap();
        let b = cached.evaluate(&g).unwrap();
        assert_eq!(a, b);
        assert_eq!((cached.hits(), cached.misses(), cached.inner_calls()), (1, 1, 1));
        assert_eq!(cached.inner.calls(), 1);
    }

    #[test]
    fn cached_table_matches_unwrapped_in_any_order() {
        let oracle = SyntheticOracle::new(SpaceKind::MobileNetV3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let gs = oracle.space().sample_distinct(&mut rng, 300, &Default::default()).unwrap();
        let rows: Vec<(Genotype, Vec<f64>)> = gs.iter().map(|g| (g.clone(), oracle.evaluate(g).unwrap())).collect();
        let table = TabularOracle::from_rows(oracle.objectives().to_vec(), rows).unwrap();
        let cached = Cached::new(TabularOracle::from_rows(table.objectives().to_vec(), table.rows()).unwrap());
        for _ in 0..3 {
            let mut order = gs.clone();
            order.extend(gs.iter().take(50).cloned());
            order.shuffle(&mut rng);
            for g in &order {
                assert_eq!(cached.evaluate(g).unwrap(), table.evaluate(g).unwrap());
            }
        }
        assert_eq!(cached.len(), cached.misses() as usize);
    }
}
