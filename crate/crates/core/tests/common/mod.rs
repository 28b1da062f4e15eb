//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use jobcorpus::classifiers::FeatureVector;

pub fn dense_dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kernel_matrix(points: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| (-gamma * dense_dist2(a, b)).exp()).collect())
        .collect()
}

pub fn objective(q: &[Vec<f64>], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * q[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

fn signed_kernel(points: &[Vec<f64>], y: &[f64], gamma: f64) -> Vec<Vec<f64>> {
    let k = kernel_matrix(points, gamma);
    (0..y.len())
        .map(|i| (0..y.len()).map(|j| y[i] * y[j] * k[i][j]).collect())
        .collect()
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..n {
                a[r][k] -= f * a[col][k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Exact maximum of the SVM dual by enumerating every assignment of each
/// multiplier to {0, C, free}. For a fixed assignment the free multipliers
/// and the equality multiplier solve a linear stationarity system; the best
/// feasible candidate over all 3^n assignments is the optimum.
pub fn exact_dual_max(points: &[Vec<f64>], y: &[f64], gamma: f64, c: f64) -> (f64, Vec<f64>) {
    let n = y.len();
    let q = signed_kernel(points, y, gamma);
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut status = vec![0u8; n];
        let mut v = code;
        for s in status.iter_mut() {
            *s = (v % 3) as u8;
            v /= 3;
        }
        let mut alpha: Vec<f64> = status.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        let free: Vec<usize> = (0..n).filter(|&i| status[i] == 2).collect();
        if free.is_empty() {
            let eq: f64 = (0..n).map(|i| alpha[i] * y[i]).sum();
            if eq.abs() > 1e-12 {
                continue;
            }
        } else {
            // Unknowns: alpha_F then nu.
            //   for i in F: sum_{j in F} Q_ij a_j + y_i nu = 1 - sum_{j bound} Q_ij a_j
            //   sum_{j in F} y_j a_j = - sum_{j bound} y_j a_j
            let m = free.len() + 1;
            let mut a = vec![vec![0.0; m]; m];
            let mut b = vec![0.0; m];
            for (r, &i) in free.iter().enumerate() {
                for (k, &j) in free.iter().enumerate() {
                    a[r][k] = q[i][j];
                }
                a[r][m - 1] = y[i];
                b[r] = 1.0 - (0..n).filter(|j| status[*j] == 1).map(|j| q[i][j] * c).sum::<f64>();
            }
            for (k, &j) in free.iter().enumerate() {
                a[m - 1][k] = y[j];
            }
            b[m - 1] = -(0..n).filter(|j| status[*j] == 1).map(|j| y[j] * c).sum::<f64>();
            let Some(x) = solve_linear(a, b) else { continue };
            if free.iter().enumerate().any(|(k, _)| x[k] < -1e-12 || x[k] > c + 1e-12) {
                continue;
            }
            for (k, &i) in free.iter().enumerate() {
                alpha[i] = x[k].clamp(0.0, c);
            }
        }
        let obj = objective(&q, &alpha);
        if obj > best.0 {
            best = (obj, alpha);
        }
    }
    best
}

/// Best dual objective over a uniform grid of `steps + 1` values per
/// multiplier, with the last multiplier fixed by the equality constraint.
pub fn grid_dual_max(points: &[Vec<f64>], y: &[f64], gamma: f64, c: f64, steps: usize) -> f64 {
    let n = y.len();
    let q = signed_kernel(points, y, gamma);
    let h = c / steps as f64;
    let mut best = f64::NEG_INFINITY;
    let mut idx = vec![0usize; n - 1];
    loop {
        let mut alpha: Vec<f64> = idx.iter().map(|&k| k as f64 * h).collect();
        let partial: f64 = alpha.iter().zip(y).map(|(a, yy)| a * yy).sum();
        let last = -partial * y[n - 1];
        if (-1e-12..=c + 1e-12).contains(&last) {
            alpha.push(last.clamp(0.0, c));
            best = best.max(objective(&q, &alpha));
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return best;
            }
            idx[k] += 1;
            if idx[k] <= steps {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

pub fn to_sparse(points: &[Vec<f64>]) -> Vec<FeatureVector> {
    points.iter().map(|p| FeatureVector::dense(p)).collect()
}

/// Cosine of raw TF-IDF vectors, written against plain maps.
pub fn tfidf_cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(t, w)| b.get(t).map(|v| v * w)).sum();
    let na: f64 = a.values().map(|w| w * w).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|w| w * w).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Strict-majority verdict of a vote list.
pub fn majority(votes: &[bool]) -> bool {
    votes.iter().filter(|&&v| v).count() * 2 > votes.len()
}
