use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{feature_matrix, PredictorError, PredictorKind, PredictorModel, PredictorParams};
use crate::error::SearchError;
use crate::evaluators::{evaluate_batch, Evaluator};
use crate::space::{Genotype, SearchSpace};

/// Mean absolute percentage error, `100/n · Σ |aᵢ − pᵢ| / |aᵢ|`.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64, PredictorError> {
    if actual.is_empty() || actual.len() != predicted.len() {
        return Err(PredictorError::MapeShape { actual: actual.len(), predicted: predicted.len() });
    }
    let mut total = 0.0;
    for (index, (a, p)) in actual.iter().zip(predicted).enumerate() {
        if *a == 0.0 {
            return Err(PredictorError::ZeroActual { index });
        }
        total += ((a - p) / a).abs();
    }
    Ok(100.0 * total / actual.len() as f64)
}

/// Training-set-size study for one objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapeStudy {
    pub sizes: Vec<usize>,
    pub holdout: usize,
    pub trials: usize,
    /// Index of the objective to predict.
    pub objective: usize,
    pub kind: PredictorKind,
    pub params: PredictorParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapeStat {
    pub size: usize,
    pub mean: f64,
    /// Sample standard deviation across trials; 0 for a single trial.
    pub stddev: f64,
    pub trials: usize,
}

pub fn mean_and_stddev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// For each size and trial: sample `size + holdout` distinct genotypes,
/// train on the first `size`, and measure MAPE on the rest.
pub fn mape_curve<E, R>(space: &SearchSpace, evaluator: &E, study: &MapeStudy, rng: &mut R) -> Result<Vec<MapeStat>, SearchError>
where
    E: Evaluator + ?Sized,
    R: Rng + ?Sized,
{
    if study.trials == 0 || study.holdout == 0 {
        return Err(SearchError::Config("MAPE study needs trials >= 1 and holdout >= 1".into()));
    }
    if study.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SearchError::Config("MAPE study sizes must be strictly ascending".into()));
    }
    if study.objective >= evaluator.objectives().len() {
        return Err(SearchError::Config(format!("objective index {} out of range", study.objective)));
    }
    let objective_name = evaluator.objectives()[study.objective].name.clone();
    let mut stats = Vec::with_capacity(study.sizes.len());
    for &size in &study.sizes {
        let mut errors = Vec::with_capacity(study.trials);
        for _ in 0..study.trials {
            let sample = space.sample_distinct(rng, size + study.holdout, &HashSet::new())?;
            let values = evaluate_batch(evaluator, &sample).map_err(|f| f.into_search_error(&sample))?;
            let targets: Vec<f64> = values.iter().map(|v| v[study.objective]).collect();
            let (train, test) = sample.split_at(size);
            let train_refs: Vec<&Genotype> = train.iter().collect();
            let test_refs: Vec<&Genotype> = test.iter().collect();
            let x_train = feature_matrix(space, &train_refs)?;
            let x_test = feature_matrix(space, &test_refs)?;
            let model = PredictorModel::train(study.kind, &study.params, &x_train, &targets[..size], &objective_name, space.id())?;
            let predicted = model.predict(&x_test)?;
            errors.push(mape(&targets[size..], &predicted)?);
        }
        let (mean, stddev) = mean_and_stddev(&errors);
        stats.push(MapeStat { size, mean, stddev, trials: study.trials });
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluators::SyntheticOracle;
    use crate::objective::Objective;
    use crate::space::{define_mobilenetv3_space, SpaceKind};
    use crate::evaluators::EvalError;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independently coded MAPE used as an oracle.
    fn mape_oracle(a: &[f64], p: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..a.len() {
            let rel = (a[i] - p[i]).abs() / a[i].abs();
            s += rel;
        }
        s / a.len() as f64 * 100.0
    }

    #[test]
    fn mape_basics() {
        assert_eq!(mape(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((mape(&[100.0], &[90.0]).unwrap() - 10.0).abs() < 1e-12);
        assert!(matches!(mape(&[1.0, 0.0], &[1.0, 1.0]), Err(PredictorError::ZeroActual { index: 1 })));
        assert!(matches!(mape(&[], &[]), Err(PredictorError::MapeShape { .. })));
    }

    #[test]
    fn mape_matches_oracle_and_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(1..30);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..100.0) * if rng.random_bool(0.2) { -1.0 } else { 1.0 }).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
            let m = mape(&a, &p).unwrap();
            assert!((m - mape_oracle(&a, &p)).abs() < 1e-12 * m.max(1.0));
            let k = rng.random_range(0.1..50.0);
            let a2: Vec<f64> = a.iter().map(|v| v * k).collect();
            let p2: Vec<f64> = p.iter().map(|v| v * k).collect();
            assert!((mape(&a2, &p2).unwrap() - m).abs() < 1e-9 * m.max(1.0));
        }
    }

    struct LinearTarget {
        space: SearchSpace,
        objectives: Vec<Objective>,
    }

    impl Evaluator for LinearTarget {
        fn objectives(&self) -> &[Objective] {
            &self.objectives
        }

        fn evaluate(&self, g: &Genotype) -> Result<Vec<f64>, EvalError> {
            let f = self.space.one_hot_encode(g)?;
            let v = 100.0 + f.iter().enumerate().map(|(i, x)| x * ((i % 5) as f64 - 2.0)).sum::<f64>();
            Ok(vec![v])
        }
    }

    #[test]
    fn noiseless_linear_target_is_recovered() {
        let space = define_mobilenetv3_space();
        let eval = LinearTarget { space: space.clone(), objectives: vec![Objective::maximize("q")] };
        let study = MapeStudy {
            sizes: vec![2 * space.feature_len()],
            holdout: 100,
            trials: 2,
            objective: 0,
            kind: PredictorKind::Ridge,
            params: PredictorParams { ridge_alpha: 1e-6, ..PredictorParams::default() },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let stats = mape_curve(&space, &eval, &study, &mut rng).unwrap();
        assert!(stats[0].mean < 1.0, "{stats:?}");
    }

    #[test]
    fn curve_is_deterministic_and_improves() {
        let space = SpaceKind::MobileNetV3.space();
        let oracle = SyntheticOracle::new(SpaceKind::MobileNetV3);
        let study = MapeStudy {
            sizes: vec![100, 1000],
            holdout: 200,
            trials: 10,
            objective: 0,
            kind: PredictorKind::Ridge,
            params: PredictorParams::default(),
        };
        let a = mape_curve(&space, &oracle, &study, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = mape_curve(&space, &oracle, &study, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(a[1].mean < a[0].mean, "{a:?}");
    }
}
