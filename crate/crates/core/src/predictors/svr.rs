//! ε-insensitive support vector regression with an RBF kernel.
//!
//! The dual is solved in the doubled-variable form
//!
//! ```text
//! min ½ zᵀQz + pᵀz   s.t.  yᵀz = 0,  0 ≤ z ≤ C
//! ```
//!
//! with `z = (α, α*)`, `y = (+1…, −1…)`, `p = (ε − t, ε + t)` and
//! `Q = [K −K; −K K]`, by sequential minimal optimization using
//! second-order working set selection. Pass order is fully deterministic.
//! The fitted function is `f(x) = Σ βᵢ k(xᵢ, x) + b` with `βᵢ = αᵢ − α*ᵢ`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::PredictorError;

const TAU: f64 = 1e-12;

/// Kernel width selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gamma {
    /// `1 / (feature_length · variance of all feature entries)`.
    Scale,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub gamma: Gamma,
    /// Stop when the maximal KKT violation drops below this value.
    pub tolerance: f64,
    /// `None` picks `max(100_000, 100 · rows)`.
    pub max_iterations: Option<usize>,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self { c: 1.0, epsilon: 0.1, gamma: Gamma::Scale, tolerance: 1e-3, max_iterations: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    /// `βᵢ = αᵢ − α*ᵢ` for every retained support input.
    pub coefficients: Vec<f64>,
    /// Row-major support inputs, `coefficients.len() × feature_len`.
    pub support: Vec<f64>,
    pub feature_len: usize,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub epsilon: f64,
    /// Solver diagnostics at termination.
    pub iterations: usize,
    pub duality_gap: f64,
}

impl SvrModel {
    pub fn support_len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn support_row(&self, i: usize) -> &[f64] {
        &self.support[i * self.feature_len..(i + 1) * self.feature_len]
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut sum = self.bias;
        for (i, &coef) in self.coefficients.iter().enumerate() {
            sum += coef * rbf(self.gamma, self.support_row(i), row);
        }
        sum
    }
}

#[inline]
fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

pub fn scale_gamma(features: &DMatrix<f64>) -> f64 {
    let count = features.len() as f64;
    if count == 0.0 {
        return 1.0;
    }
    let mean = features.iter().sum::<f64>() / count;
    let var = features.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / count;
    if var > 0.0 {
        1.0 / (features.ncols() as f64 * var)
    } else {
        1.0
    }
}

struct Solution {
    alpha: Vec<f64>,
    grad: Vec<f64>,
    iterations: usize,
    violation: f64,
}

/// Trains an ε-SVR on the rows of `features`.
pub fn train_svr_rbf(features: &DMatrix<f64>, targets: &[f64], params: &SvrParams) -> Result<SvrModel, PredictorError> {
    let (rows, cols) = features.shape();
    if rows < 2 {
        return Err(PredictorError::TooFewRows { rows });
    }
    if rows != targets.len() {
        return Err(PredictorError::ShapeMismatch { rows, targets: targets.len() });
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(PredictorError::InvalidHyperparameter(format!("SVR C must be > 0, got {}", params.c)));
    }
    if !(params.epsilon >= 0.0 && params.epsilon.is_finite()) {
        return Err(PredictorError::InvalidHyperparameter(format!("SVR epsilon must be >= 0, got {}", params.epsilon)));
    }
    let gamma = match params.gamma {
        Gamma::Scale => scale_gamma(features),
        Gamma::Value(g) if g > 0.0 && g.is_finite() => g,
        Gamma::Value(g) => return Err(PredictorError::InvalidHyperparameter(format!("SVR gamma must be > 0, got {g}"))),
    };

    let data: Vec<f64> = features.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect();
    let row = |i: usize| &data[i * cols..(i + 1) * cols];
    let mut kernel = vec![0.0; rows * rows];
    for i in 0..rows {
        kernel[i * rows + i] = 1.0;
        for j in 0..i {
            let k = rbf(gamma, row(i), row(j));
            kernel[i * rows + j] = k;
            kernel[j * rows + i] = k;
        }
    }

    let max_iterations = params.max_iterations.unwrap_or_else(|| (100 * rows).max(100_000));
    let sol = solve_dual(&kernel, targets, params.c, params.epsilon, params.tolerance, max_iterations);
    let beta: Vec<f64> = (0..rows).map(|i| sol.alpha[i] - sol.alpha[i + rows]).collect();
    let bias = -compute_rho(&sol.alpha, &sol.grad, params.c, rows);
    let gap = duality_gap(&kernel, targets, &beta, &sol.alpha, bias, params.c, params.epsilon);

    if sol.violation >= params.tolerance {
        return Err(PredictorError::NotConverged {
            iterations: sol.iterations,
            violation: sol.violation,
            duality_gap: gap,
        });
    }

    let mut coefficients = Vec::new();
    let mut support = Vec::new();
    for (i, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            coefficients.push(b);
            support.extend_from_slice(row(i));
        }
    }
    Ok(SvrModel {
        coefficients,
        support,
        feature_len: cols,
        bias,
        gamma,
        c: params.c,
        epsilon: params.epsilon,
        iterations: sol.iterations,
        duality_gap: gap,
    })
}

#[inline]
fn sign(t: usize, l: usize) -> f64 {
    if t < l {
        1.0
    } else {
        -1.0
    }
}

fn solve_dual(kernel: &[f64], targets: &[f64], c: f64, epsilon: f64, tol: f64, max_iterations: usize) -> Solution {
    let l = targets.len();
    let n = 2 * l;
    let mut alpha = vec![0.0; n];
    let mut grad: Vec<f64> = (0..n)
        .map(|t| if t < l { epsilon - targets[t] } else { epsilon + targets[t - l] })
        .collect();
    let k = |a: usize, b: usize| kernel[(a % l) * l + (b % l)];
    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    let mut iterations = 0;
    loop {
        // Maximal violating pair with second-order selection of j.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            let y = sign(t, l);
            if in_up(alpha[t], y) {
                let v = -y * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut obj_min = f64::INFINITY;
        for t in 0..n {
            let y = sign(t, l);
            if in_low(alpha[t], y) {
                let yg = y * grad[t];
                if yg > gmax2 {
                    gmax2 = yg;
                }
                if i_sel != usize::MAX {
                    let b = gmax + yg;
                    if b > 0.0 {
                        let a = k(i_sel, i_sel) + k(t, t) - 2.0 * k(i_sel, t);
                        let a = if a > 0.0 { a } else { TAU };
                        let obj = -(b * b) / a;
                        if obj < obj_min {
                            obj_min = obj;
                            j_sel = t;
                        }
                    }
                }
            }
        }
        let violation = gmax + gmax2;
        if violation < tol || i_sel == usize::MAX || j_sel == usize::MAX || iterations >= max_iterations {
            return Solution { alpha, grad, iterations, violation: violation.max(0.0) };
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (yi, yj) = (sign(i, l), sign(j, l));
        let qij = yi * yj * k(i, j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if yi != yj {
            let quad = (k(i, i) + k(j, j) + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (k(i, i) + k(j, j) - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        for t in 0..n {
            let yt = sign(t, l);
            grad[t] += yt * (yi * k(i, t) * di + yj * k(j, t) * dj);
        }
    }
}

fn compute_rho(alpha: &[f64], grad: &[f64], c: f64, l: usize) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..alpha.len() {
        let y = sign(t, l);
        let yg = y * grad[t];
        if alpha[t] >= c {
            if y < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Primal objective minus dual objective at the returned solution.
fn duality_gap(kernel: &[f64], targets: &[f64], beta: &[f64], alpha: &[f64], bias: f64, c: f64, epsilon: f64) -> f64 {
    let l = targets.len();
    let mut quad = 0.0;
    let mut primal_loss = 0.0;
    for i in 0..l {
        let k_beta: f64 = (0..l).map(|j| kernel[i * l + j] * beta[j]).sum();
        quad += beta[i] * k_beta;
        let residual = (targets[i] - k_beta - bias).abs();
        primal_loss += (residual - epsilon).max(0.0);
    }
    let primal = 0.5 * quad + c * primal_loss;
    let linear: f64 = (0..l).map(|i| epsilon * (alpha[i] + alpha[i + l]) - targets[i] * beta[i]).sum();
    let dual = -(0.5 * quad + linear);
    primal - dual
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(rows: usize, cols: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(rows, cols, |_, _| if rng.random_bool(0.4) { 1.0 } else { 0.0 });
        let y = x
            .row_iter()
            .map(|r| 10.0 + 3.0 * (r.iter().take(cols / 2).sum::<f64>()).sqrt() + rng.random_range(-0.2..0.2))
            .collect();
        (x, y)
    }

    fn feasible(model: &SvrModel) {
        let sum: f64 = model.coefficients.iter().sum();
        assert!(sum.abs() < 1e-6, "sum {sum}");
        for &b in &model.coefficients {
            assert!(b >= -model.c - 1e-6 && b <= model.c + 1e-6, "{b}");
        }
    }

    #[test]
    fn constant_targets_fit_by_bias() {
        let (x, _) = dataset(20, 6, 1);
        let y = vec![7.5; 20];
        let m = train_svr_rbf(&x, &y, &SvrParams::default()).unwrap();
        feasible(&m);
        for r in x.row_iter() {
            let row: Vec<f64> = r.iter().copied().collect();
            assert!((m.predict_row(&row) - 7.5).abs() <= 0.1 + 1e-9);
        }
    }

    #[test]
    fn two_far_points_hand_solution() {
        // k12 ≈ 0, so the dual reduces to min β² + 2ε|β| + β with β₂ = −β₁:
        // β₁ = −(1 − 2ε)/2, bias ½.
        let x = DMatrix::from_row_slice(2, 1, &[0.0, 10.0]);
        let y = [0.0, 1.0];
        let eps = 0.1;
        let params = SvrParams { c: 100.0, epsilon: eps, gamma: Gamma::Value(1.0), tolerance: 1e-6, max_iterations: None };
        let m = train_svr_rbf(&x, &y, &params).unwrap();
        feasible(&m);
        assert_eq!(m.support_len(), 2);
        assert!((m.coefficients[0] + 0.4).abs() < 1e-6);
        assert!((m.coefficients[1] - 0.4).abs() < 1e-6);
        assert!((m.bias - 0.5).abs() < 1e-6);
        assert!((m.predict_row(&[0.0]) - 0.0).abs() <= eps + 1e-6);
        assert!((m.predict_row(&[10.0]) - 1.0).abs() <= eps + 1e-6);
    }

    #[test]
    fn dual_feasibility_and_gap() {
        for seed in 0..6 {
            let (x, y) = dataset(120, 20, seed);
            let params = SvrParams { c: 1.0 + seed as f64, ..SvrParams::default() };
            let m = train_svr_rbf(&x, &y, &params).unwrap();
            feasible(&m);
            assert!(m.duality_gap >= -1e-9);
            // Gap is bounded by the violation tolerance summed over the 2n duals.
            assert!(m.duality_gap <= 2.0 * 120.0 * params.c * params.tolerance, "gap {}", m.duality_gap);
        }
    }

    #[test]
    fn free_support_vectors_sit_on_the_tube() {
        // Continuous features keep rows distinct, so a support row maps
        // back to exactly one target.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = DMatrix::from_fn(80, 4, |_, _| rng.random_range(0.0..1.0_f64));
        let y: Vec<f64> = x.row_iter().map(|r| (3.0_f64 * r[0]).sin() + r[1] * r[2] + rng.random_range(-0.2..0.2)).collect();
        let params = SvrParams { c: 5.0, ..SvrParams::default() };
        let m = train_svr_rbf(&x, &y, &params).unwrap();
        let mut checked = 0;
        for (i, &b) in m.coefficients.iter().enumerate() {
            if b.abs() > 1e-9 && b.abs() < m.c - 1e-9 {
                let row = m.support_row(i).to_vec();
                let target = (0..80).find(|&r| x.row(r).iter().copied().collect::<Vec<_>>() == row).map(|r| y[r]).unwrap();
                let err = (m.predict_row(&row) - target).abs();
                assert!(err <= m.epsilon + 2e-3, "err {err}");
                assert!(err >= m.epsilon - 2e-3, "err {err}");
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn reports_non_convergence() {
        let (x, y) = dataset(60, 10, 2);
        let params = SvrParams { max_iterations: Some(2), tolerance: 1e-9, ..SvrParams::default() };
        match train_svr_rbf(&x, &y, &params) {
            Err(PredictorError::NotConverged { iterations, duality_gap, .. }) => {
                assert_eq!(iterations, 2);
                assert!(duality_gap.is_finite());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deterministic_training() {
        let (x, y) = dataset(70, 10, 8);
        let a = train_svr_rbf(&x, &y, &SvrParams::default()).unwrap();
        let b = train_svr_rbf(&x, &y, &SvrParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scale_gamma_convention() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        // variance 0.25 over all entries, 2 features
        assert!((scale_gamma(&x) - 2.0).abs() < 1e-12);
        assert_eq!(scale_gamma(&DMatrix::from_element(3, 2, 1.0)), 1.0);
    }
}
