//! Discretized ZDT1, used as a correctness benchmark for the GA core.

use super::{EvalError, Evaluator};
use crate::objective::Objective;
use crate::space::{DesignVariable, Genotype, SearchSpace};

/// `variables` ungated variables with `levels` choices each; index `i`
/// decodes to `x = i / (levels − 1)`.
pub fn zdt1_space(variables: usize, levels: usize) -> SearchSpace {
    let choices: Vec<i64> = (0..levels as i64).collect();
    let vars = (1..=variables).map(|i| DesignVariable::new(format!("x{i}"), &choices, "x", 0.0)).collect();
    SearchSpace::new(format!("zdt1-{variables}x{levels}"), vars).expect("zdt1 layout is well formed")
}

/// Hypervolume of the true front `f2 = 1 − √f1` against `(r, r)` with
/// `r ≥ 1`: `∫₀¹ (r − 1 + √x) dx + (r − 1)·r`.
pub fn zdt1_ideal_hypervolume(r: f64) -> f64 {
    (r - 1.0) + 2.0 / 3.0 + (r - 1.0) * r
}

pub struct Zdt1 {
    space: SearchSpace,
    objectives: Vec<Objective>,
}

impl Zdt1 {
    pub fn new(space: SearchSpace) -> Self {
        Self { space, objectives: vec![Objective::minimize("f1"), Objective::minimize("f2")] }
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }
}

impl Evaluator for Zdt1 {
    fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    fn evaluate(&self, g: &Genotype) -> Result<Vec<f64>, EvalError> {
        self.space.validate(g)?;
        let x: Vec<f64> = g
            .indices()
            .iter()
            .zip(self.space.variables())
            .map(|(&i, v)| i as f64 / (v.cardinality() - 1) as f64)
            .collect();
        let f1 = x[0];
        let n = x.len();
        let g_val = if n > 1 { 1.0 + 9.0 * x[1..].iter().sum::<f64>() / (n - 1) as f64 } else { 1.0 };
        let f2 = g_val * (1.0 - (f1 / g_val).sqrt());
        Ok(vec![f1, f2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_hypervolume_reference() {
        assert!((zdt1_ideal_hypervolume(1.1) - (0.1 + 2.0 / 3.0 + 0.11)).abs() < 1e-12);
        assert!((zdt1_ideal_hypervolume(1.1) - 0.8767).abs() < 1e-4);
    }

    #[test]
    fn optimal_front_values() {
        let z = Zdt1::new(zdt1_space(30, 33));
        let mut idx = vec![0; 30];
        idx[0] = 16;
        let v = z.evaluate(&Genotype::new(idx)).unwrap();
        assert_eq!(v[0], 0.5);
        assert!((v[1] - (1.0 - 0.5_f64.sqrt())).abs() < 1e-12);
    }
}
