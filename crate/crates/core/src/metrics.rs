//! Pareto fronts and exact bi-objective hypervolume.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::SearchHistory;
use crate::moea::dominates_unchecked;
use crate::objective::{directions, Direction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("expected {expected}-dimensional input, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("checkpoint {checkpoint} exceeds history length {len}")]
    CheckpointBeyondHistory { checkpoint: usize, len: usize },
    #[error("curves have mismatched checkpoints")]
    CheckpointMismatch,
    #[error("no curves to aggregate")]
    Empty,
}

/// Indices of the non-dominated subset under minimization. Of several
/// identical points only the first is kept.
pub fn pareto_front(points: &[Vec<f64>]) -> Vec<usize> {
    let mut front = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            if i != j && (dominates_unchecked(q, p) || (j < i && q == p)) {
                continue 'outer;
            }
        }
        front.push(i);
    }
    front
}

/// Area dominated by `points` and bounded by `reference`.
///
/// Maximized objectives are negated (together with the reference) so a
/// single minimization sweep is used. Points that do not strictly dominate
/// the reference contribute nothing.
pub fn hypervolume_2d(points: &[Vec<f64>], reference: &[f64], directions: &[Direction]) -> Result<f64, MetricsError> {
    if reference.len() != 2 {
        return Err(MetricsError::Dimension { expected: 2, found: reference.len() });
    }
    if directions.len() != 2 {
        return Err(MetricsError::Dimension { expected: 2, found: directions.len() });
    }
    let r = [directions[0].to_min(reference[0]), directions[1].to_min(reference[1])];
    let mut inside = Vec::with_capacity(points.len());
    for p in points {
        if p.len() != 2 {
            return Err(MetricsError::Dimension { expected: 2, found: p.len() });
        }
        let q = [directions[0].to_min(p[0]), directions[1].to_min(p[1])];
        if q[0] < r[0] && q[1] < r[1] {
            inside.push(q);
        }
    }
    Ok(sweep(&mut inside, r))
}

fn sweep(points: &mut [[f64; 2]], r: [f64; 2]) -> f64 {
    points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    // Front in ascending x has strictly descending y.
    let mut front: Vec<[f64; 2]> = Vec::new();
    for p in points.iter() {
        if front.last().is_none_or(|last| p[1] < last[1]) {
            front.push(*p);
        }
    }
    let mut area = 0.0;
    for (i, p) in front.iter().enumerate() {
        let next_x = front.get(i + 1).map_or(r[0], |q| q[0]);
        area += (next_x - p[0]) * (r[1] - p[1]);
    }
    area
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvCurve {
    pub trial: String,
    pub checkpoints: Vec<usize>,
    pub values: Vec<f64>,
}

/// Hypervolume of the first `c` evaluations for each checkpoint `c`.
pub fn hv_curve(history: &SearchHistory, reference: &[f64], checkpoints: &[usize], trial: impl Into<String>) -> Result<HvCurve, MetricsError> {
    let dirs = directions(&history.objectives);
    let points = history.points();
    let mut values = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        if c > points.len() {
            return Err(MetricsError::CheckpointBeyondHistory { checkpoint: c, len: points.len() });
        }
        values.push(hypervolume_2d(&points[..c], reference, &dirs)?);
    }
    Ok(HvCurve { trial: trial.into(), checkpoints: checkpoints.to_vec(), values })
}

/// Hypervolume after every evaluation, maintaining the running front.
pub fn cumulative_hypervolume(history: &SearchHistory, reference: &[f64]) -> Result<Vec<f64>, MetricsError> {
    let dirs = directions(&history.objectives);
    if dirs.len() != 2 || reference.len() != 2 {
        return Err(MetricsError::Dimension { expected: 2, found: dirs.len().max(reference.len()) });
    }
    let r = [dirs[0].to_min(reference[0]), dirs[1].to_min(reference[1])];
    let mut front: Vec<[f64; 2]> = Vec::new();
    let mut current = 0.0;
    let mut out = Vec::with_capacity(history.len());
    for rec in &history.records {
        let q = [dirs[0].to_min(rec.values[0]), dirs[1].to_min(rec.values[1])];
        let covered = front.iter().any(|f| f[0] <= q[0] && f[1] <= q[1]);
        if q[0] < r[0] && q[1] < r[1] && !covered {
            front.retain(|f| !(q[0] <= f[0] && q[1] <= f[1]));
            front.push(q);
            current = sweep(&mut front, r);
        }
        out.push(current);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurve {
    pub checkpoints: Vec<usize>,
    pub mean: Vec<f64>,
    /// Standard error: sample standard deviation over √trials (0 for one trial).
    pub stderr: Vec<f64>,
    pub trials: usize,
}

pub fn aggregate_curves(curves: &[HvCurve]) -> Result<AggregateCurve, MetricsError> {
    let first = curves.first().ok_or(MetricsError::Empty)?;
    if curves.iter().any(|c| c.checkpoints != first.checkpoints || c.values.len() != first.checkpoints.len()) {
        return Err(MetricsError::CheckpointMismatch);
    }
    let n = curves.len() as f64;
    let mut mean = Vec::with_capacity(first.checkpoints.len());
    let mut stderr = Vec::with_capacity(first.checkpoints.len());
    for k in 0..first.checkpoints.len() {
        let m = curves.iter().map(|c| c.values[k]).sum::<f64>() / n;
        let se = if curves.len() < 2 {
            0.0
        } else {
            let var = curves.iter().map(|c| (c.values[k] - m).powi(2)).sum::<f64>() / (n - 1.0);
            var.sqrt() / n.sqrt()
        };
        mean.push(m);
        stderr.push(se);
    }
    Ok(AggregateCurve { checkpoints: first.checkpoints.clone(), mean, stderr, trials: curves.len() })
}
