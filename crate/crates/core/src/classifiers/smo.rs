//! Sequential minimal optimization for the soft-margin SVM dual
//!
//!   max  Σ α_i − ½ Σ_ij α_i α_j y_i y_j K(x_i, x_j)
//!   s.t. 0 ≤ α_i ≤ C,  Σ α_i y_i = 0
//!
//! Each step picks the maximal-violating index `i` and, among the indices
//! that can move against it, the `j` with the largest second-order
//! objective gain, then solves the two-variable subproblem in closed form.
//! Iteration stops once the largest KKT violation falls below `tol`.

use serde::{Deserialize, Serialize};

use super::kernel::{rbf_kernel, Gram};
use super::{ClassifierError, FeatureVector};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    /// Box constraint on every multiplier.
    pub c: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    /// Hard cap on two-variable updates.
    pub max_iter: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

impl SmoParams {
    pub(crate) fn validate(&self) -> Result<(), ClassifierError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(ClassifierError::BadParameter(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0) {
            return Err(ClassifierError::BadParameter(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

pub(crate) struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves the dual for labels `y` in {-1, +1} over a precomputed kernel.
pub(crate) fn solve(gram: &mut Gram<'_>, y: &[f64], params: &SmoParams) -> SmoSolution {
    let n = y.len();
    let c = params.c;
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut first = None;
        for t in 0..n {
            if y[t] > 0.0 {
                if alpha[t] < c && -grad[t] >= gmax {
                    gmax = -grad[t];
                    first = Some(t);
                }
            } else if alpha[t] > 0.0 && grad[t] >= gmax {
                gmax = grad[t];
                first = Some(t);
            }
        }
        let Some(i) = first else {
            converged = true;
            break;
        };
        let ki = gram.row(i);

        let mut gmax2 = f64::NEG_INFINITY;
        let mut second = None;
        let mut obj_min = f64::INFINITY;
        for t in 0..n {
            let grad_diff = if y[t] > 0.0 {
                if alpha[t] <= 0.0 {
                    continue;
                }
                gmax2 = gmax2.max(grad[t]);
                gmax + grad[t]
            } else {
                if alpha[t] >= c {
                    continue;
                }
                gmax2 = gmax2.max(-grad[t]);
                gmax - grad[t]
            };
            if grad_diff > 0.0 {
                let quad = 2.0 - 2.0 * ki[t];
                let quad = if quad > 0.0 { quad } else { TAU };
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= obj_min {
                    obj_min = obj;
                    second = Some(t);
                }
            }
        }
        let Some(j) = second.filter(|_| gmax + gmax2 >= params.tol) else {
            converged = true;
            break;
        };
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = 2.0 - 2.0 * ki[j];
        let quad = if quad > 0.0 { quad } else { TAU };
        if y[i] != y[j] {
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

        let (di, dj) = ((alpha[i] - old_i) * y[i], (alpha[j] - old_j) * y[j]);
        let kj = gram.row(j);
        for t in 0..n {
            grad[t] += y[t] * (ki[t] * di + kj[t] * dj);
        }
    }

    SmoSolution {
        bias: -rho(&alpha, &grad, y, c),
        alpha,
        iterations,
        converged,
    }
}

fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Binary Gaussian-kernel SVM: `f(x) = Σ α_i y_i K(x, x_i) + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmBinaryModel {
    pub support_vectors: Vec<FeatureVector>,
    pub alphas: Vec<f64>,
    pub labels: Vec<i8>,
    pub bias: f64,
    pub gamma: f64,
}

impl SvmBinaryModel {
    /// A model with no support vectors whose decision value is `bias`.
    pub fn constant(bias: f64, gamma: f64) -> Self {
        Self {
            support_vectors: Vec::new(),
            alphas: Vec::new(),
            labels: Vec::new(),
            bias,
            gamma,
        }
    }

    pub fn decision_value(&self, x: &FeatureVector) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.alphas)
            .zip(&self.labels)
            .map(|((sv, a), &y)| a * f64::from(y) * rbf_kernel(x, sv, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    /// Sign decision: `+1` when the raw value is nonnegative.
    pub fn classify(&self, x: &FeatureVector) -> i8 {
        if self.decision_value(x) >= 0.0 {
            1
        } else {
            -1
        }
    }

    /// `Σ α_i y_i` over the stored support vectors.
    pub fn dual_equality_residual(&self) -> f64 {
        self.alphas
            .iter()
            .zip(&self.labels)
            .map(|(a, &y)| a * f64::from(y))
            .sum()
    }
}

pub(crate) fn labels_to_signs(labels: &[i8]) -> Result<Vec<f64>, ClassifierError> {
    let y: Vec<f64> = labels.iter().map(|&l| if l > 0 { 1.0 } else { -1.0 }).collect();
    let pos = y.iter().filter(|&&v| v > 0.0).count();
    if y.is_empty() {
        return Err(ClassifierError::EmptyData);
    }
    if pos == 0 || pos == y.len() {
        return Err(ClassifierError::SingleClass);
    }
    Ok(y)
}

pub(crate) fn binary_from_solution(
    points: &[FeatureVector],
    y: &[f64],
    sol: &SmoSolution,
    gamma: f64,
) -> SvmBinaryModel {
    let mut model = SvmBinaryModel::constant(sol.bias, gamma);
    for (t, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            model.support_vectors.push(points[t].clone());
            model.alphas.push(a);
            model.labels.push(if y[t] > 0.0 { 1 } else { -1 });
        }
    }
    model
}

/// Trains one binary SVM on `(x, ±1)` pairs.
pub fn train_svm_binary(
    data: &[(FeatureVector, i8)],
    gamma: f64,
    params: &SmoParams,
) -> Result<SvmBinaryModel, ClassifierError> {
    params.validate()?;
    if !(gamma > 0.0) {
        return Err(ClassifierError::BadParameter(format!("gamma must be positive, got {gamma}")));
    }
    let labels: Vec<i8> = data.iter().map(|d| d.1).collect();
    let y = labels_to_signs(&labels)?;
    let points: Vec<FeatureVector> = data.iter().map(|d| d.0.clone()).collect();
    let mut gram = Gram::new(&points, gamma);
    let sol = solve(&mut gram, &y, params);
    if !sol.converged {
        log::warn!("SMO stopped at the iteration cap ({}) before converging", sol.iterations);
    }
    Ok(binary_from_solution(&points, &y, &sol, gamma))
}

/// Dual objective `Σ α − ½ αᵀQα` for multipliers over `data`.
pub fn dual_objective(data: &[(FeatureVector, i8)], alpha: &[f64], gamma: f64) -> f64 {
    let mut quad = 0.0;
    for (i, (xi, yi)) in data.iter().enumerate() {
        for (j, (xj, yj)) in data.iter().enumerate() {
            quad += alpha[i] * alpha[j] * f64::from(*yi) * f64::from(*yj) * rbf_kernel(xi, xj, gamma);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Training instances whose margin `y·f(x)` breaks the KKT conditions by
/// more than `tol` given their multiplier (0, free, or at `c`).
pub fn kkt_violations(model: &SvmBinaryModel, data: &[(FeatureVector, i8)], alpha: &[f64], c: f64, tol: f64) -> Vec<usize> {
    data.iter()
        .enumerate()
        .filter(|(t, (x, y))| {
            let margin = f64::from(*y) * model.decision_value(x);
            let a = alpha[*t];
            if a <= 0.0 {
                margin < 1.0 - tol
            } else if a >= c {
                margin > 1.0 + tol
            } else {
                (margin - 1.0).abs() > tol
            }
        })
        .map(|(t, _)| t)
        .collect()
}

/// Recovers the full multiplier vector (zeros for non-support vectors).
pub fn full_alpha(model: &SvmBinaryModel, data: &[(FeatureVector, i8)]) -> Vec<f64> {
    let mut used = vec![false; model.support_vectors.len()];
    data.iter()
        .map(|(x, y)| {
            model
                .support_vectors
                .iter()
                .enumerate()
                .position(|(k, sv)| !used[k] && sv == x && model.labels[k] == *y)
                .map(|k| {
                    used[k] = true;
                    model.alphas[k]
                })
                .unwrap_or(0.0)
        })
        .collect()
}
