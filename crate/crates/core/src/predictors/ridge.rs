use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::PredictorError;

/// Pivot ratio below which an unregularized normal matrix is treated as
/// singular.
const SINGULAR_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub alpha: f64,
}

impl RidgeModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }
}

/// Closed-form ridge regression with an unregularized intercept.
///
/// Features and targets are centered; the weights solve
/// `(XcᵀXc + αI) w = Xcᵀyc` and the intercept is recovered from the means.
pub fn train_ridge(features: &DMatrix<f64>, targets: &[f64], alpha: f64) -> Result<RidgeModel, PredictorError> {
    let (rows, cols) = features.shape();
    if rows < 2 {
        return Err(PredictorError::TooFewRows { rows });
    }
    if rows != targets.len() {
        return Err(PredictorError::ShapeMismatch { rows, targets: targets.len() });
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(PredictorError::InvalidHyperparameter(format!("ridge alpha must be finite and >= 0, got {alpha}")));
    }

    let n = rows as f64;
    let x_mean: DVector<f64> = DVector::from_iterator(cols, features.column_iter().map(|c| c.sum() / n));
    let y_mean = targets.iter().sum::<f64>() / n;

    let mut centered = features.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-x_mean[j]);
    }
    let yc = DVector::from_iterator(rows, targets.iter().map(|y| y - y_mean));

    let mut normal = centered.tr_mul(&centered);
    for j in 0..cols {
        normal[(j, j)] += alpha;
    }
    let rhs = centered.tr_mul(&yc);

    let max_diag = normal.diagonal().iter().cloned().fold(0.0_f64, f64::max);
    let chol = normal.cholesky().ok_or(PredictorError::Singular)?;
    if alpha == 0.0 {
        let min_pivot = chol.l_dirty().diagonal().iter().map(|d| d * d).fold(f64::INFINITY, f64::min);
        if max_diag == 0.0 || min_pivot < SINGULAR_RATIO * max_diag {
            return Err(PredictorError::Singular);
        }
    }
    let weights = chol.solve(&rhs);
    let intercept = y_mean - weights.dot(&x_mean);

    Ok(RidgeModel { weights: weights.iter().copied().collect(), intercept, alpha })
}
