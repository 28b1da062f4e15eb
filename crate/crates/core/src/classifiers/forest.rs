use std::collections::BTreeSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClassifierError, FeatureVector};
use crate::taxonomy::CategoryCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `floor(sqrt(n_features))`, at least one.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, n_features: usize) -> usize {
        match self {
            Self::Sqrt => ((n_features as f64).sqrt() as usize).max(1),
            Self::All => n_features.max(1),
            Self::Count(k) => k.clamp(1, n_features.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub num_trees: usize,
    pub seed: u64,
    pub max_features: MaxFeatures,
    /// Grow each tree on a with-replacement resample of the training set.
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            num_trees: 300,
            seed: 0,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Node {
    Leaf { class: u32 },
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
}

/// CART tree with Gini impurity. Leaves hold class indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

struct TreeInput<'a> {
    xs: &'a [FeatureVector],
    y: &'a [u32],
    n_classes: usize,
    n_features: usize,
}

fn plurality(counts: &[usize]) -> u32 {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best as u32
}

fn sum_sq_over_n(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    counts.iter().map(|&c| (c * c) as f64).sum::<f64>() / n as f64
}

impl DecisionTree {
    fn grow(input: &TreeInput<'_>, samples: Vec<usize>, params: &ForestParams, rng: &mut ChaCha8Rng) -> Self {
        let k_features = params.max_features.resolve(input.n_features);
        let mut nodes = vec![Node::Leaf { class: 0 }];
        let mut stack = vec![(0usize, samples, 0usize)];
        while let Some((slot, idx, depth)) = stack.pop() {
            let mut counts = vec![0usize; input.n_classes];
            for &s in &idx {
                counts[input.y[s] as usize] += 1;
            }
            let leaf = Node::Leaf { class: plurality(&counts) };
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            if pure || idx.len() < params.min_samples_split || params.max_depth.is_some_and(|d| depth >= d) {
                nodes[slot] = leaf;
                continue;
            }
            let mut candidates: Vec<u32> = idx
                .iter()
                .flat_map(|&s| input.xs[s].entries().iter().map(|e| e.0))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if params.max_features != MaxFeatures::All && candidates.len() > k_features {
                let mut picked: Vec<usize> = index::sample(rng, candidates.len(), k_features).into_vec();
                picked.sort_unstable();
                candidates = picked.into_iter().map(|i| candidates[i]).collect();
            }
            match best_split(input, &idx, &counts, &candidates) {
                Some((feature, threshold)) => {
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        idx.iter().partition(|&&s| input.xs[s].get(feature) <= threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf { class: 0 });
                    nodes.push(Node::Leaf { class: 0 });
                    nodes[slot] = Node::Split {
                        feature,
                        threshold,
                        left: left as u32,
                        right: left as u32 + 1,
                    };
                    stack.push((left + 1, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
                None => nodes[slot] = leaf,
            }
        }
        Self { nodes }
    }

    /// Grows a deterministic tree on every sample with every feature
    /// considered at each split.
    pub fn fit(data: &[(FeatureVector, u32)], n_classes: usize, n_features: usize) -> Self {
        let xs: Vec<FeatureVector> = data.iter().map(|d| d.0.clone()).collect();
        let y: Vec<u32> = data.iter().map(|d| d.1).collect();
        let input = TreeInput {
            xs: &xs,
            y: &y,
            n_classes,
            n_features,
        };
        let params = ForestParams {
            num_trees: 1,
            bootstrap: false,
            max_features: MaxFeatures::All,
            ..ForestParams::default()
        };
        Self::grow(&input, (0..xs.len()).collect(), &params, &mut ChaCha8Rng::seed_from_u64(0))
    }

    pub fn predict_index(&self, x: &FeatureVector) -> u32 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x.get(*feature) <= *threshold { *left } else { *right } as usize;
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn split_features(&self) -> impl Iterator<Item = u32> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }
}

/// Best `(feature, threshold)` by Gini decrease; `None` when no split
/// strictly improves on the parent.
fn best_split(input: &TreeInput<'_>, idx: &[usize], counts: &[usize], candidates: &[u32]) -> Option<(u32, f64)> {
    let n = idx.len();
    let parent = sum_sq_over_n(counts, n);
    let mut best: Option<(f64, u32, f64)> = None;
    let mut column: Vec<(f64, u32)> = Vec::with_capacity(n);
    let mut left = vec![0usize; input.n_classes];
    let mut right = vec![0usize; input.n_classes];
    for &f in candidates {
        column.clear();
        column.extend(idx.iter().map(|&s| (input.xs[s].get(f), input.y[s])));
        column.sort_by(|a, b| a.0.total_cmp(&b.0));
        if column[0].0 == column[n - 1].0 {
            continue;
        }
        left.iter_mut().for_each(|c| *c = 0);
        right.copy_from_slice(counts);
        let (mut sq_left, mut sq_right) = (0.0f64, counts.iter().map(|&c| (c * c) as f64).sum::<f64>());
        for k in 0..n - 1 {
            let c = column[k].1 as usize;
            sq_left += (2 * left[c] + 1) as f64;
            left[c] += 1;
            sq_right -= (2 * right[c] - 1) as f64;
            right[c] -= 1;
            if column[k].0 == column[k + 1].0 {
                continue;
            }
            let (nl, nr) = ((k + 1) as f64, (n - k - 1) as f64);
            let score = sq_left / nl + sq_right / nr;
            if best.is_none_or(|b| score > b.0) {
                best = Some((score, f, 0.5 * (column[k].0 + column[k + 1].0)));
            }
        }
    }
    best.filter(|b| b.0 > parent + 1e-12).map(|b| (b.1, b.2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub classes: Vec<CategoryCode>,
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
    pub params: ForestParams,
}

impl Forest {
    pub fn votes(&self, x: &FeatureVector) -> Vec<usize> {
        let mut votes = vec![0usize; self.classes.len()];
        for t in &self.trees {
            votes[t.predict_index(x) as usize] += 1;
        }
        votes
    }

    /// Plurality vote; ties go to the lowest code.
    pub fn predict(&self, x: &FeatureVector) -> &CategoryCode {
        &self.classes[plurality(&self.votes(x)) as usize]
    }
}

pub fn forest_predict(forest: &Forest, x: &FeatureVector) -> CategoryCode {
    forest.predict(x).clone()
}

/// Grows `num_trees` trees in parallel. Tree `t` draws from its own stream of
/// a generator seeded with `seed`, so results do not depend on scheduling.
pub fn train_forest(
    data: &[(FeatureVector, CategoryCode)],
    n_features: usize,
    params: &ForestParams,
) -> Result<Forest, ClassifierError> {
    if data.is_empty() {
        return Err(ClassifierError::EmptyData);
    }
    if params.num_trees == 0 {
        return Err(ClassifierError::BadParameter("num_trees must be at least 1".into()));
    }
    let classes: Vec<CategoryCode> = data
        .iter()
        .map(|d| d.1.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let xs: Vec<FeatureVector> = data.iter().map(|d| d.0.clone()).collect();
    let y: Vec<u32> = data
        .iter()
        .map(|d| classes.binary_search(&d.1).expect("class present") as u32)
        .collect();
    let n_features = xs
        .iter()
        .filter_map(|x| x.max_column())
        .map(|c| c as usize + 1)
        .fold(n_features, usize::max);
    let input = TreeInput {
        xs: &xs,
        y: &y,
        n_classes: classes.len(),
        n_features,
    };
    let n = xs.len();
    let trees = (0..params.num_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(t as u64);
            let samples = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            DecisionTree::grow(&input, samples, params, &mut rng)
        })
        .collect();
    Ok(Forest {
        classes,
        trees,
        n_features,
        params: *params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(s: &str) -> CategoryCode {
        s.parse().unwrap()
    }

    fn data() -> Vec<(FeatureVector, CategoryCode)> {
        (0..60)
            .map(|i| {
                let k = i % 3;
                let a = (i as f64 * 1.3).sin() * 0.4;
                let mut v = vec![0.0; 6];
                v[k * 2] = 1.0 + a;
                v[(k * 2 + 3) % 6] = 0.3 - a;
                (FeatureVector::dense(&v), code(["1-01-01-01", "1-01-01-02", "2-01-01-01"][k]))
            })
            .collect()
    }

    #[test]
    fn degenerate_forest_equals_single_tree() {
        let d = data();
        let params = ForestParams {
            num_trees: 1,
            bootstrap: false,
            max_features: MaxFeatures::All,
            seed: 99,
            ..ForestParams::default()
        };
        let forest = train_forest(&d, 6, &params).unwrap();
        let indexed: Vec<(FeatureVector, u32)> = d
            .iter()
            .map(|(x, c)| (x.clone(), forest.classes.binary_search(c).unwrap() as u32))
            .collect();
        let tree = DecisionTree::fit(&indexed, 3, 6);
        assert_eq!(forest.trees[0], tree);
        for (x, c) in &d {
            assert_eq!(forest.predict(x), c);
        }
    }

    #[test]
    fn identical_labels_predict_that_label() {
        let d: Vec<_> = data().into_iter().map(|(x, _)| (x, code("5-01-01-01"))).collect();
        let f = train_forest(&d, 6, &ForestParams { num_trees: 5, ..ForestParams::default() }).unwrap();
        assert_eq!(forest_predict(&f, &FeatureVector::dense(&[9.0; 6])), code("5-01-01-01"));
        assert!(f.trees.iter().all(|t| t.node_count() == 1));
    }

    #[test]
    fn same_seed_same_predictions() {
        let d = data();
        let params = ForestParams {
            num_trees: 15,
            seed: 7,
            ..ForestParams::default()
        };
        let a = train_forest(&d, 6, &params).unwrap();
        let b = train_forest(&d, 6, &params).unwrap();
        assert_eq!(a, b);
        let held: Vec<FeatureVector> = (0..20)
            .map(|i| FeatureVector::dense(&[(i % 3) as f64, 0.5, (i % 5) as f64 * 0.2, 0.1, 0.0, 1.0]))
            .collect();
        for x in &held {
            assert_eq!(a.predict(x), b.predict(x));
        }
        for t in &a.trees {
            assert!(t.split_features().all(|f| (f as usize) < a.n_features));
        }
    }

    #[test]
    fn vote_rules() {
        let leaf = |class| DecisionTree {
            nodes: vec![Node::Leaf { class }],
        };
        let forest = |votes: &[u32]| Forest {
            classes: vec![code("1-01-01-01"), code("1-01-01-02")],
            trees: votes.iter().map(|&v| leaf(v)).collect(),
            n_features: 1,
            params: ForestParams::default(),
        };
        let x = FeatureVector::default();
        assert_eq!(forest(&[1, 1, 1]).predict(&x), &code("1-01-01-02"));
        assert_eq!(forest(&[0, 0, 1]).predict(&x), &code("1-01-01-01"));
        assert_eq!(forest(&[1, 1, 0, 0]).predict(&x), &code("1-01-01-01"));
    }

    #[test]
    fn zero_trees_rejected() {
        let params = ForestParams { num_trees: 0, ..ForestParams::default() };
        assert!(train_forest(&data(), 6, &params).is_err());
        assert!(train_forest(&[], 6, &ForestParams::default()).is_err());
    }
}
