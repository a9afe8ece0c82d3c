use thiserror::Error;

use super::Individual;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("objective vectors have different lengths ({left} vs {right})")]
pub struct DominanceError {
    pub left: usize,
    pub right: usize,
}

/// True when `a` is no worse than `b` everywhere and strictly better
/// somewhere (minimization).
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool, DominanceError> {
    if a.len() != b.len() {
        return Err(DominanceError { left: a.len(), right: b.len() });
    }
    Ok(dominates_unchecked(a, b))
}

pub fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        strictly |= x < y;
    }
    strictly
}

/// Fast non-dominated sorting. Returns fronts of indices, best first;
/// indices within a front are ascending.
pub fn non_dominated_sort(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates_unchecked(&points[i], &points[j]) {
                dominated_by_me[i].push(j);
                domination_count[j] += 1;
            } else if dominates_unchecked(&points[j], &points[i]) {
                dominated_by_me[j].push(i);
                domination_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by_me[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of one front. Boundary members get
/// infinity; an objective with zero range over the front contributes 0.
pub fn crowding_distance(front: &[&[f64]]) -> Vec<f64> {
    let n = front.len();
    let mut distance = vec![0.0; n];
    if n == 0 {
        return distance;
    }
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = front[0].len();
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        order.sort_by(|&a, &b| front[a][k].total_cmp(&front[b][k]).then(a.cmp(&b)));
        let lo = front[order[0]][k];
        let hi = front[order[n - 1]][k];
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        for w in 1..n - 1 {
            let gap = front[order[w + 1]][k] - front[order[w - 1]][k];
            distance[order[w]] += gap / range;
        }
    }
    distance
}

/// Sets `rank` (0 = first front) and `crowding` on every individual.
pub fn assign_rank_and_crowding(population: &mut [Individual]) -> Vec<Vec<usize>> {
    let points: Vec<Vec<f64>> = population.iter().map(|p| p.objectives.clone()).collect();
    let fronts = non_dominated_sort(&points);
    for (rank, front) in fronts.iter().enumerate() {
        let members: Vec<&[f64]> = front.iter().map(|&i| points[i].as_slice()).collect();
        let crowd = crowding_distance(&members);
        for (&i, c) in front.iter().zip(crowd) {
            population[i].rank = rank;
            population[i].crowding = c;
        }
    }
    fronts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Peel fronts by repeated pairwise scans.
    fn brute_ranks(points: &[Vec<f64>]) -> Vec<usize> {
        let mut rank = vec![usize::MAX; points.len()];
        let mut r = 0;
        while rank.contains(&usize::MAX) {
            let remaining: Vec<usize> = (0..points.len()).filter(|&i| rank[i] == usize::MAX).collect();
            let layer: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&i| !remaining.iter().any(|&j| dominates_unchecked(&points[j], &points[i])))
                .collect();
            for i in layer {
                rank[i] = r;
            }
            r += 1;
        }
        rank
    }

    #[test]
    fn dominance_basics() {
        assert!(dominates(&[1.0, 2.0], &[2.0, 2.0]).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0]).unwrap());
        assert!(!dominates(&[1.0, 3.0], &[2.0, 2.0]).unwrap());
        assert_eq!(dominates(&[1.0], &[1.0, 2.0]), Err(DominanceError { left: 1, right: 2 }));
    }

    #[test]
    fn sort_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dims in [2, 3] {
            let points: Vec<Vec<f64>> = (0..200).map(|_| (0..dims).map(|_| rng.random_range(0..30) as f64).collect()).collect();
            let expected = brute_ranks(&points);
            let fronts = non_dominated_sort(&points);
            let mut got = vec![usize::MAX; points.len()];
            for (r, f) in fronts.iter().enumerate() {
                for &i in f {
                    got[i] = r;
                }
            }
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn crowding_hand_case() {
        let pts: [&[f64]; 3] = [&[0.0, 2.0], &[1.0, 1.0], &[2.0, 0.0]];
        let d = crowding_distance(&pts);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        assert!((d[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn crowding_with_zero_range_objective() {
        let pts: [&[f64]; 4] = [&[0.0, 5.0], &[1.0, 5.0], &[1.0, 5.0], &[3.0, 5.0]];
        let d = crowding_distance(&pts);
        assert!(d.iter().all(|v| !v.is_nan()));
        assert!(d[0].is_infinite() && d[3].is_infinite());
        let identical: [&[f64]; 3] = [&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]];
        assert_eq!(crowding_distance(&identical), vec![0.0; 3]);
    }

    fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..5).prop_flat_map(|m| {
            let v = || prop::collection::vec((0i32..5).prop_map(f64::from), m);
            (v(), v(), v())
        })
    }

    proptest! {
        #[test]
        fn dominance_is_a_strict_partial_order((a, b, c) in vec_pair()) {
            prop_assert!(!dominates_unchecked(&a, &a));
            if dominates_unchecked(&a, &b) {
                prop_assert!(!dominates_unchecked(&b, &a));
                if dominates_unchecked(&b, &c) {
                    prop_assert!(dominates_unchecked(&a, &c));
                }
            }
        }

        #[test]
        fn fronts_partition_and_respect_dominance(points in prop::collection::vec(prop::collection::vec((0i32..8).prop_map(f64::from), 2), 0..60)) {
            let fronts = non_dominated_sort(&points);
            let mut seen: Vec<usize> = fronts.iter().flatten().copied().collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..points.len()).collect::<Vec<_>>());
            for f in &fronts {
                for &i in f {
                    for &j in f {
                        prop_assert!(!dominates_unchecked(&points[i], &points[j]));
                    }
                }
            }
            for w in fronts.windows(2) {
                for &j in &w[1] {
                    prop_assert!(w[0].iter().any(|&i| dominates_unchecked(&points[i], &points[j])));
                }
            }
        }
    }
}
