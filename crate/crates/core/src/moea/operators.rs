use rand::Rng;

use super::Individual;
use crate::space::{Genotype, SearchSpace};

/// Binary crowded tournament between two distinct random members: lower
/// rank wins, then larger crowding distance, then a fair coin.
pub fn tournament_select<R: Rng + ?Sized>(population: &[Individual], rng: &mut R) -> usize {
    let n = population.len();
    if n < 2 {
        return 0;
    }
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    let (pa, pb) = (&population[a], &population[b]);
    if pa.rank != pb.rank {
        return if pa.rank < pb.rank { a } else { b };
    }
    if pa.crowding != pb.crowding {
        return if pa.crowding > pb.crowding { a } else { b };
    }
    if rng.random_bool(0.5) {
        a
    } else {
        b
    }
}

/// With the given probability, swaps the segment between two random cut
/// points. Children are canonicalized.
pub fn crossover_two_point<R: Rng + ?Sized>(
    space: &SearchSpace,
    a: &Genotype,
    b: &Genotype,
    probability: f64,
    rng: &mut R,
) -> (Genotype, Genotype) {
    let mut x = a.indices().to_vec();
    let mut y = b.indices().to_vec();
    if rng.random_bool(probability) && x.len() > 1 {
        let mut lo = rng.random_range(0..=x.len());
        let mut hi = rng.random_range(0..=x.len());
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        x[lo..hi].swap_with_slice(&mut y[lo..hi]);
    }
    space.canonicalize_in_place(&mut x);
    space.canonicalize_in_place(&mut y);
    (Genotype::new(x), Genotype::new(y))
}

/// Each non-fixed variable is independently reset to a uniformly drawn
/// choice with the given probability. The result is canonicalized.
pub fn mutate_random_reset<R: Rng + ?Sized>(space: &SearchSpace, g: &Genotype, probability: f64, rng: &mut R) -> Genotype {
    let mut x = g.indices().to_vec();
    for (slot, var) in x.iter_mut().zip(space.variables()) {
        if !var.is_fixed() && rng.random_bool(probability) {
            *slot = rng.random_range(0..var.cardinality());
        }
    }
    space.canonicalize_in_place(&mut x);
    Genotype::new(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{DesignVariable, SpaceKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn flat_space(n: usize, k: usize) -> SearchSpace {
        let choices: Vec<i64> = (0..k as i64).collect();
        SearchSpace::new("flat", (0..n).map(|i| DesignVariable::new(format!("v{i}"), &choices, "g", 1.0)).collect()).unwrap()
    }

    #[test]
    fn tie_tournament_is_fair() {
        let pop = vec![
            Individual { genotype: Genotype::new(vec![0]), objectives: vec![0.0], rank: 0, crowding: 1.0 },
            Individual { genotype: Genotype::new(vec![1]), objectives: vec![0.0], rank: 0, crowding: 1.0 },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let trials = 10_000;
        let wins = (0..trials).filter(|_| tournament_select(&pop, &mut rng) == 0).count();
        let share = wins as f64 / trials as f64;
        assert!((share - 0.5).abs() < 0.03, "{share}");
    }

    #[test]
    fn tournament_prefers_rank_then_crowding() {
        let mk = |rank, crowding| Individual { genotype: Genotype::new(vec![0]), objectives: vec![0.0], rank, crowding };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let by_rank = vec![mk(1, f64::INFINITY), mk(0, 0.0)];
        assert!((0..100).all(|_| tournament_select(&by_rank, &mut rng) == 1));
        let by_crowd = vec![mk(0, 0.5), mk(0, 2.0)];
        assert!((0..100).all(|_| tournament_select(&by_crowd, &mut rng) == 1));
    }

    #[test]
    fn crossover_preserves_multiset_per_position() {
        let space = flat_space(12, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let a = space.sample_one(&mut rng);
            let b = space.sample_one(&mut rng);
            let (c, d) = crossover_two_point(&space, &a, &b, 1.0, &mut rng);
            for i in 0..12 {
                let mut parents = [a[i], b[i]];
                let mut kids = [c[i], d[i]];
                parents.sort_unstable();
                kids.sort_unstable();
                assert_eq!(parents, kids);
            }
        }
        let a = space.sample_one(&mut rng);
        let b = space.sample_one(&mut rng);
        assert_eq!(crossover_two_point(&space, &a, &b, 0.0, &mut rng), (a, b));
    }

    #[test]
    fn offspring_are_canonical() {
        let space = SpaceKind::Transformer.space();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let a = space.sample_one(&mut rng);
            let b = space.sample_one(&mut rng);
            let (c, d) = crossover_two_point(&space, &a, &b, 0.9, &mut rng);
            assert!(space.is_canonical(&c) && space.is_canonical(&d));
            assert!(space.is_canonical(&mutate_random_reset(&space, &c, 0.3, &mut rng)));
        }
    }

    #[test]
    fn mutation_rate_matches_expectation() {
        // 45 variables with 3 choices at rate 0.02: expected changes 45 * 0.02 * 2/3 = 0.6.
        let space = flat_space(45, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = space.sample_one(&mut rng);
        let trials = 20_000;
        let mut changed = 0usize;
        for _ in 0..trials {
            let m = mutate_random_reset(&space, &g, 0.02, &mut rng);
            changed += (0..45).filter(|&i| m[i] != g[i]).count();
        }
        let mean = changed as f64 / trials as f64;
        assert!((mean - 0.6).abs() < 0.06, "{mean}");
    }

    #[test]
    fn fixed_variables_never_mutate() {
        let space = SpaceKind::Transformer.space();
        let fixed: Vec<usize> = (0..space.len()).filter(|&i| space.variables()[i].is_fixed()).collect();
        assert!(!fixed.is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = space.sample_one(&mut rng);
        for _ in 0..500 {
            let m = mutate_random_reset(&space, &g, 1.0, &mut rng);
            assert!(fixed.iter().all(|&i| m[i] == 0));
        }
    }
}
