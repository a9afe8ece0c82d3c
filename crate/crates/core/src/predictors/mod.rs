//! Per-objective regressors trained on one-hot genotype features.

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objective::Objective;
use crate::space::{Genotype, SearchSpace, SpaceError};

mod mape;
mod ridge;
mod svr;

pub use mape::{mape, mape_curve, MapeStat, MapeStudy};
pub use ridge::{train_ridge, RidgeModel};
pub use svr::{scale_gamma, train_svr_rbf, Gamma, SvrModel, SvrParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PredictorError {
    #[error("need at least 2 training rows, got {rows}")]
    TooFewRows { rows: usize },
    #[error("{rows} feature rows but {targets} targets")]
    ShapeMismatch { rows: usize, targets: usize },
    #[error("feature length {found} does not match trained layout of {expected}")]
    FeatureLength { expected: usize, found: usize },
    #[error("normal equations are singular; use alpha > 0")]
    Singular,
    #[error("SVR did not converge after {iterations} iterations (KKT violation {violation:.3e}, duality gap {duality_gap:.3e})")]
    NotConverged { iterations: usize, violation: f64, duality_gap: f64 },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("actual value at index {index} is zero; MAPE is undefined")]
    ZeroActual { index: usize },
    #[error("MAPE needs equal, non-empty inputs (got {actual} actual, {predicted} predicted)")]
    MapeShape { actual: usize, predicted: usize },
    #[error("duplicate genotype `{0}` in dataset")]
    DuplicateRow(String),
    #[error("row has {found} objective values, dataset has {expected} objectives")]
    RowArity { expected: usize, found: usize },
    #[error("unknown objective `{0}`")]
    UnknownObjective(String),
    #[error("unsupported model document version {0}")]
    Version(u32),
    #[error("model document: {0}")]
    Document(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Validated objective measurements keyed by canonical genotype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    objectives: Vec<Objective>,
    rows: Vec<(Genotype, Vec<f64>)>,
    #[serde(skip)]
    keys: HashSet<Genotype>,
}

impl Dataset {
    pub fn new(objectives: Vec<Objective>) -> Self {
        Self { objectives, rows: Vec::new(), keys: HashSet::new() }
    }

    pub fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    pub fn rows(&self) -> &[(Genotype, Vec<f64>)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn contains(&self, g: &Genotype) -> bool {
        self.keys.contains(g)
    }

    pub fn push(&mut self, genotype: Genotype, values: Vec<f64>) -> Result<(), PredictorError> {
        if values.len() != self.objectives.len() {
            return Err(PredictorError::RowArity { expected: self.objectives.len(), found: values.len() });
        }
        if !self.keys.insert(genotype.clone()) {
            return Err(PredictorError::DuplicateRow(genotype.to_text()));
        }
        self.rows.push((genotype, values));
        Ok(())
    }

    /// Rebuilds the key index after deserialization.
    pub fn reindex(&mut self) -> Result<(), PredictorError> {
        self.keys.clear();
        for (g, _) in &self.rows {
            if !self.keys.insert(g.clone()) {
                return Err(PredictorError::DuplicateRow(g.to_text()));
            }
        }
        Ok(())
    }

    pub fn genotypes(&self) -> impl Iterator<Item = &Genotype> {
        self.rows.iter().map(|(g, _)| g)
    }

    pub fn features(&self, space: &SearchSpace) -> Result<DMatrix<f64>, PredictorError> {
        let genotypes: Vec<&Genotype> = self.genotypes().collect();
        feature_matrix(space, &genotypes)
    }

    pub fn targets(&self, objective: usize) -> Vec<f64> {
        self.rows.iter().map(|(_, v)| v[objective]).collect()
    }
}

/// One-hot feature matrix, one row per genotype.
pub fn feature_matrix(space: &SearchSpace, genotypes: &[&Genotype]) -> Result<DMatrix<f64>, PredictorError> {
    let width = space.feature_len();
    let mut m = DMatrix::zeros(genotypes.len(), width);
    for (r, g) in genotypes.iter().enumerate() {
        let f = space.one_hot_encode(g)?;
        for (c, v) in f.into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    Ridge,
    Svr,
}

impl std::str::FromStr for PredictorKind {
    type Err = PredictorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ridge" => Ok(PredictorKind::Ridge),
            "svr" => Ok(PredictorKind::Svr),
            other => Err(PredictorError::InvalidHyperparameter(format!("unknown predictor `{other}` (ridge | svr)"))),
        }
    }
}

impl std::fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PredictorKind::Ridge => "ridge",
            PredictorKind::Svr => "svr",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorParams {
    pub ridge_alpha: f64,
    pub svr: SvrParams,
}

impl Default for PredictorParams {
    fn default() -> Self {
        Self { ridge_alpha: 1.0, svr: SvrParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Regressor {
    Ridge(RidgeModel),
    Svr(SvrModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorModel {
    pub objective: String,
    pub training_size: usize,
    /// Identifies the one-hot layout: space id plus feature length.
    pub space_id: String,
    pub feature_len: usize,
    pub regressor: Regressor,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    version: u32,
    model: PredictorModel,
}

impl PredictorModel {
    pub fn train(
        kind: PredictorKind,
        params: &PredictorParams,
        features: &DMatrix<f64>,
        targets: &[f64],
        objective: &str,
        space_id: &str,
    ) -> Result<Self, PredictorError> {
        let regressor = match kind {
            PredictorKind::Ridge => Regressor::Ridge(train_ridge(features, targets, params.ridge_alpha)?),
            PredictorKind::Svr => Regressor::Svr(train_svr_rbf(features, targets, &params.svr)?),
        };
        Ok(Self {
            objective: objective.to_string(),
            training_size: targets.len(),
            space_id: space_id.to_string(),
            feature_len: features.ncols(),
            regressor,
        })
    }

    pub fn kind(&self) -> PredictorKind {
        match self.regressor {
            Regressor::Ridge(_) => PredictorKind::Ridge,
            Regressor::Svr(_) => PredictorKind::Svr,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64, PredictorError> {
        if row.len() != self.feature_len {
            return Err(PredictorError::FeatureLength { expected: self.feature_len, found: row.len() });
        }
        Ok(match &self.regressor {
            Regressor::Ridge(m) => m.predict_row(row),
            Regressor::Svr(m) => m.predict_row(row),
        })
    }

    pub fn predict(&self, features: &DMatrix<f64>) -> Result<Vec<f64>, PredictorError> {
        if features.ncols() != self.feature_len {
            return Err(PredictorError::FeatureLength { expected: self.feature_len, found: features.ncols() });
        }
        features
            .row_iter()
            .map(|r| {
                let row: Vec<f64> = r.iter().copied().collect();
                self.predict_row(&row)
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelDocument { version: MODEL_FORMAT_VERSION, model: self.clone() })
            .expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PredictorError> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| PredictorError::Document(e.to_string()))?;
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(PredictorError::Version(doc.version));
        }
        Ok(doc.model)
    }
}
