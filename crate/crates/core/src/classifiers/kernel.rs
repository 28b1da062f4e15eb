use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use rayon::prelude::*;

use super::FeatureVector;

/// Gaussian kernel `exp(-gamma * |x - z|^2)`.
pub fn rbf_kernel(x: &FeatureVector, z: &FeatureVector, gamma: f64) -> f64 {
    (-gamma * x.squared_distance(z)).exp()
}

/// Rows above this many training points are computed on demand instead of
/// being precomputed.
const DENSE_LIMIT: usize = 4000;
const LAZY_CACHE_ROWS: usize = 512;

/// Kernel matrix over a training set, shared by the one-vs-rest binaries.
pub enum Gram<'a> {
    Dense(Vec<Arc<[f64]>>),
    Lazy {
        points: &'a [FeatureVector],
        gamma: f64,
        cache: HashMap<usize, Arc<[f64]>>,
        order: VecDeque<usize>,
    },
}

impl<'a> Gram<'a> {
    pub fn new(points: &'a [FeatureVector], gamma: f64) -> Self {
        if points.len() <= DENSE_LIMIT {
            Self::dense(points, gamma)
        } else {
            Self::lazy(points, gamma)
        }
    }

    pub fn dense(points: &[FeatureVector], gamma: f64) -> Self {
        let n = points.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { 1.0 } else { rbf_kernel(&points[i], &points[j], gamma) })
                    .collect()
            })
            .collect();
        Self::Dense(rows.into_iter().map(Arc::from).collect())
    }

    pub fn lazy(points: &'a [FeatureVector], gamma: f64) -> Self {
        Self::Lazy {
            points,
            gamma,
            cache: HashMap::new(),
            order: VecDeque::new(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Dense(rows) => rows.len(),
            Self::Lazy { points, .. } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&mut self, i: usize) -> Arc<[f64]> {
        match self {
            Self::Dense(rows) => rows[i].clone(),
            Self::Lazy {
                points,
                gamma,
                cache,
                order,
            } => {
                if let Some(r) = cache.get(&i) {
                    return r.clone();
                }
                let x = &points[i];
                let row: Arc<[f64]> = points
                    .iter()
                    .enumerate()
                    .map(|(j, z)| if i == j { 1.0 } else { rbf_kernel(x, z, *gamma) })
                    .collect();
                if order.len() >= LAZY_CACHE_ROWS {
                    if let Some(old) = order.pop_front() {
                        cache.remove(&old);
                    }
                }
                order.push_back(i);
                cache.insert(i, row.clone());
                row
            }
        }
    }

    /// Cheap copy for another binary: dense rows are shared, lazy caches are
    /// not.
    pub fn share(&self) -> Gram<'a> {
        match self {
            Self::Dense(rows) => Self::Dense(rows.clone()),
            Self::Lazy { points, gamma, .. } => Self::lazy(points, *gamma),
        }
    }
}
