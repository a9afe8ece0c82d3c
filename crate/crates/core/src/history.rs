use serde::{Deserialize, Serialize};

use crate::objective::{to_minimization, Objective};
use crate::space::Genotype;

/// One true (or predicted, for inner searches) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    /// 1-based, dense and ascending.
    pub evaluation: usize,
    /// Generation for NSGA-II, iteration for LINAS, 0 for random search.
    pub step: usize,
    pub genotype: Genotype,
    /// Natural units, in objective order.
    pub values: Vec<f64>,
}

/// Ordered log of every evaluation of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHistory {
    pub algorithm: String,
    pub space_id: String,
    pub objectives: Vec<Objective>,
    pub records: Vec<HistoryRecord>,
}

impl SearchHistory {
    pub fn new(algorithm: impl Into<String>, space_id: impl Into<String>, objectives: Vec<Objective>) -> Self {
        Self { algorithm: algorithm.into(), space_id: space_id.into(), objectives, records: Vec::new() }
    }

    pub fn push(&mut self, step: usize, genotype: Genotype, values: Vec<f64>) {
        let evaluation = self.records.len() + 1;
        self.records.push(HistoryRecord { evaluation, step, genotype, values });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Objective vectors in natural units.
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.values.clone()).collect()
    }

    /// Objective vectors in minimization form.
    pub fn min_points(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| to_minimization(&self.objectives, &r.values)).collect()
    }
}

/// A run that stopped early; `partial` holds every evaluation completed
/// before the failure.
#[derive(Debug, Clone)]
pub struct SearchFailure {
    pub error: crate::error::SearchError,
    pub partial: SearchHistory,
}

impl std::fmt::Display for SearchFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} after {} evaluations", self.error, self.partial.len())
    }
}

impl std::error::Error for SearchFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}
