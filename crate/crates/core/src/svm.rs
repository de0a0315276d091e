//! Soft-margin SVM on a precomputed Gram matrix, trained by SMO.
//!
//! The dual is
//!
//! ```text
//! max Σ α_i − ½ Σ_ij α_i α_j y_i y_j K_ij   s.t.  0 ≤ α_i ≤ C,  Σ α_i y_i = 0
//! ```
//!
//! Each step picks the maximal KKT-violating index `i` from the "up" set and
//! pairs it with the `j` from the "low" set that gives the largest second-order
//! objective gain, then solves the two-variable subproblem exactly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernels::GramMatrix;
use crate::labels::class_counts;

/// Dual coefficients above this count as support vectors.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

// Floor for the pair curvature K_ii + K_jj − 2K_ij on singular kernels.
const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub struct SvmOptions {
    pub c: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SvmOptions {
    fn default() -> Self {
        Self {
            c: 1.0,
            tolerance: 1e-3,
            max_iterations: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub support_indices: Vec<usize>,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(skip)]
    pub labels: Vec<i8>,
    #[serde(skip)]
    pub iterations: usize,
    #[serde(skip)]
    pub converged: bool,
}

impl SvmModel {
    /// Assembles a model from dual coefficients, e.g. from an external solver.
    pub fn from_dual(alpha: Vec<f64>, bias: f64, labels: Vec<i8>, c: f64) -> Result<Self> {
        check_dim(labels.len(), alpha.len())?;
        let support_indices = support_of(&alpha);
        Ok(Self {
            alpha,
            bias,
            support_indices,
            c,
            labels,
            iterations: 0,
            converged: true,
        })
    }

    /// `Σ α_i − ½ αᵀ Q α` with `Q_ij = y_i y_j K_ij`.
    pub fn dual_objective(&self, gram: &DMatrix<f64>) -> f64 {
        dual_objective(gram, &self.labels, &self.alpha)
    }
}

fn support_of(alpha: &[f64]) -> Vec<usize> {
    (0..alpha.len()).filter(|&i| alpha[i] > SUPPORT_THRESHOLD).collect()
}

pub fn dual_objective(gram: &DMatrix<f64>, labels: &[i8], alpha: &[f64]) -> f64 {
    let m = alpha.len();
    let mut quad = 0.0;
    for i in 0..m {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..m {
            quad += alpha[i] * alpha[j] * f64::from(labels[i] * labels[j]) * gram[(i, j)];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

pub fn train_svm(gram: &GramMatrix, labels: &[i8], c: f64) -> Result<SvmModel> {
    train_svm_with(gram.entries(), labels, &SvmOptions { c, ..SvmOptions::default() })
}

pub fn train_svm_with(k: &DMatrix<f64>, labels: &[i8], options: &SvmOptions) -> Result<SvmModel> {
    let m = labels.len();
    check_dim(m, k.nrows())?;
    check_dim(m, k.ncols())?;
    class_counts(labels)?;
    if !(options.c > 0.0) {
        return Err(Error::Argument(format!("C must be positive, got {}", options.c)));
    }
    let c = options.c;
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let q = |i: usize, j: usize| y[i] * y[j] * k[(i, j)];

    let mut alpha = vec![0.0; m];
    // gradient of ½αᵀQα − eᵀα
    let mut grad = vec![-1.0; m];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iterations {
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        for t in 0..m {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] > g_max {
                g_max = -y[t] * grad[t];
                i = t;
            }
        }
        let mut g_min = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best_gain = f64::NEG_INFINITY;
        for t in 0..m {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            g_min = g_min.min(v);
            if i != usize::MAX && v < g_max {
                let b = g_max - v;
                let a = (k[(i, i)] + k[(t, t)] - 2.0 * k[(i, t)]).max(TAU);
                let gain = b * b / a;
                if gain > best_gain {
                    best_gain = gain;
                    j = t;
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max - g_min < options.tolerance {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let a = (k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)]).max(TAU);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / a;
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
            let delta = (grad[i] - grad[j]) / a;
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
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..m {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    let bias = -offset(&alpha, &grad, &y, c);
    Ok(SvmModel {
        support_indices: support_of(&alpha),
        alpha,
        bias,
        c,
        labels: labels.to_vec(),
        iterations,
        converged,
    })
}

/// Decision offset `ρ` (the bias is `−ρ`): the mean of `y_i ∇_i` over free
/// coefficients, or the midpoint of the feasible interval when none are free.
fn offset(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if at_lower {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        0.5 * (upper + lower)
    }
}

/// Pre-sign scores `Σ_m α_m y_m K_cross[t][m] + b`.
pub fn decision_values(model: &SvmModel, k_cross: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_dim(model.alpha.len(), k_cross.ncols())?;
    Ok((0..k_cross.nrows())
        .map(|t| {
            model
                .support_indices
                .iter()
                .map(|&m| model.alpha[m] * f64::from(model.labels[m]) * k_cross[(t, m)])
                .sum::<f64>()
                + model.bias
        })
        .collect())
}

/// Signs of the decision values; an exact zero maps to `+1`.
pub fn predict(model: &SvmModel, k_cross: &DMatrix<f64>) -> Result<Vec<i8>> {
    Ok(decision_values(model, k_cross)?.into_iter().map(sign).collect())
}

pub fn sign(value: f64) -> i8 {
    if value >= 0.0 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_point_identity_kernel() {
        let k = GramMatrix::new(DMatrix::identity(2, 2), true, false).unwrap();
        let model = train_svm(&k, &[1, -1], 10.0).unwrap();
        assert_abs_diff_eq!(model.alpha[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(model.alpha[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(model.bias, 0.0, epsilon = 1e-12);
        assert_eq!(model.support_indices, vec![0, 1]);
    }

    #[test]
    fn separable_linear_fit() {
        let pts = [[0.0, 0.0], [0.5, 0.2], [0.3, 0.6], [4.0, 4.0], [4.5, 3.8], [3.7, 4.4]];
        let labels = [-1, -1, -1, 1, 1, 1];
        let k = DMatrix::from_fn(6, 6, |i, j| pts[i][0] * pts[j][0] + pts[i][1] * pts[j][1]);
        let model = train_svm_with(&k, &labels, &SvmOptions { c: 10.0, ..Default::default() }).unwrap();
        assert_eq!(predict(&model, &k).unwrap(), labels.to_vec());
        let dual_sum: f64 = model.alpha.iter().zip(&labels).map(|(a, &y)| a * f64::from(y)).sum();
        assert_abs_diff_eq!(dual_sum, 0.0, epsilon = 1e-6);
        assert!(model.alpha.iter().all(|&a| (0.0..=10.0 + 1e-10).contains(&a)));
    }

    #[test]
    fn decision_value_examples() {
        let model = SvmModel::from_dual(vec![0.5, 0.0, 0.25], 0.1, vec![1, -1, -1], 1.0).unwrap();
        let k = DMatrix::from_row_slice(1, 3, &[2.0, 7.0, 4.0]);
        let v = decision_values(&model, &k).unwrap();
        assert_abs_diff_eq!(v[0], 0.5 * 2.0 - 0.25 * 4.0 + 0.1, epsilon = 1e-15);

        let zero = SvmModel::from_dual(vec![0.0; 3], -0.7, vec![1, -1, 1], 1.0).unwrap();
        assert_eq!(decision_values(&zero, &k).unwrap(), vec![-0.7]);
        let wrong = DMatrix::zeros(1, 2);
        assert!(decision_values(&zero, &wrong).is_err());
    }

    #[test]
    fn tie_rule() {
        assert_eq!(sign(2.3), 1);
        assert_eq!(sign(-0.1), -1);
        assert_eq!(sign(0.0), 1);
    }

    #[test]
    fn single_class_rejected() {
        let k = GramMatrix::new(DMatrix::identity(2, 2), true, false).unwrap();
        assert!(matches!(train_svm(&k, &[1, 1], 1.0), Err(Error::Label(_))));
    }

    #[test]
    fn model_json_fields() {
        let model = SvmModel::from_dual(vec![0.5, 0.5], 0.0, vec![1, -1], 1.0).unwrap();
        let json = serde_json::to_value(&model).unwrap();
        for key in ["alpha", "bias", "support_indices", "C"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }
}
