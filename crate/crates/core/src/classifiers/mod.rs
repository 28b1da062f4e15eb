//! Supervised classifiers over TF-IDF dictionary features: a one-vs-rest
//! Gaussian-kernel SVM trained by SMO and a random forest, plus the
//! evaluation and grid-search drivers used to pick between them.

mod eval;
mod forest;
mod kernel;
mod model;
mod smo;
mod svm;

pub use eval::{
    evaluate, grid_search, stratified_split, GridCell, GridFamily, GridReport, GridSpec, Split,
};
pub use forest::{forest_predict, train_forest, DecisionTree, Forest, ForestParams, MaxFeatures};
pub use kernel::{rbf_kernel, Gram};
pub use model::{ClassifierConfig, ClassifierKind, Model, TrainedClassifier, MODEL_FORMAT, MODEL_VERSION};
pub use smo::{dual_objective, full_alpha, kkt_violations, train_svm_binary, SmoParams, SvmBinaryModel};
pub use svm::{svm_predict, train_svm, SvmModel, SvmParams};

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::similarity::TfidfModel;
use crate::taxonomy::CategoryCode;

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("training data is empty")]
    EmptyData,
    #[error("invalid hyperparameter: {0}")]
    BadParameter(String),
    #[error("evaluation set is empty")]
    EmptyTestSet,
    #[error("model file: {0}")]
    ModelFile(String),
    #[error(transparent)]
    Io(#[from] crate::io::RecordError),
}

/// Sparse feature vector with strictly increasing column indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<(u32, f64)>);

impl FeatureVector {
    /// Sorts by column and sums repeated columns; zero entries are dropped.
    pub fn from_entries(mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut out: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            match out.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => out.push((c, v)),
            }
        }
        out.retain(|e| e.1 != 0.0);
        Self(out)
    }

    pub fn dense(values: &[f64]) -> Self {
        Self::from_entries(values.iter().enumerate().map(|(i, &v)| (i as u32, v)).collect())
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, col: u32) -> f64 {
        self.0
            .binary_search_by_key(&col, |e| e.0)
            .map(|i| self.0[i].1)
            .unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }

    pub fn l2_normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        Self(self.0.iter().map(|&(c, v)| (c, v / n)).collect())
    }

    /// Squared Euclidean distance, summed over the merged column order.
    pub fn squared_distance(&self, other: &Self) -> f64 {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j, mut sum) = (0, 0, 0.0);
        while i < a.len() || j < b.len() {
            let d = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x.0 == y.0 => {
                    i += 1;
                    j += 1;
                    x.1 - y.1
                }
                (Some(x), Some(y)) if x.0 < y.0 => {
                    i += 1;
                    x.1
                }
                (Some(x), None) => {
                    i += 1;
                    x.1
                }
                (_, Some(y)) => {
                    j += 1;
                    y.1
                }
                (None, None) => unreachable!(),
            };
            sum += d * d;
        }
        sum
    }

    pub fn max_column(&self) -> Option<u32> {
        self.0.last().map(|e| e.0)
    }
}

/// Feature tokens with their column positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "DictionaryRecord", into = "DictionaryRecord")]
pub struct Dictionary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    min_count: usize,
}

#[derive(Serialize, Deserialize)]
struct DictionaryRecord {
    min_count: usize,
    tokens: Vec<String>,
}

impl From<DictionaryRecord> for Dictionary {
    fn from(r: DictionaryRecord) -> Self {
        let index = r.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Self {
            tokens: r.tokens,
            index,
            min_count: r.min_count,
        }
    }
}

impl From<Dictionary> for DictionaryRecord {
    fn from(d: Dictionary) -> Self {
        Self {
            min_count: d.min_count,
            tokens: d.tokens,
        }
    }
}

impl Dictionary {
    /// Tokens with total corpus occurrence `>= min_count`, ordered by
    /// descending count then lexicographically.
    pub fn build<I, D>(docs: I, min_count: usize) -> Self
    where
        I: IntoIterator<Item = D>,
        D: AsRef<[String]>,
    {
        let min_count = min_count.max(1);
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for d in docs {
            for t in d.as_ref() {
                match counts.get_mut(t) {
                    Some(c) => *c += 1,
                    None => {
                        counts.insert(t.clone(), 1);
                    }
                }
            }
        }
        let mut kept: Vec<(String, usize)> = counts.into_iter().filter(|e| e.1 >= min_count).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        DictionaryRecord {
            min_count,
            tokens: kept.into_iter().map(|e| e.0).collect(),
        }
        .into()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn column(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    TfIdf,
    Counts,
}

/// How token lists become classifier inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureEncoding {
    pub weighting: Weighting,
    /// Scale every vector to unit length so kernel widths are
    /// comparable across documents of different lengths.
    pub l2_normalize: bool,
}

impl Default for FeatureEncoding {
    fn default() -> Self {
        Self {
            weighting: Weighting::TfIdf,
            l2_normalize: true,
        }
    }
}

/// TF-IDF weights of in-dictionary tokens at their columns.
pub fn vectorize(tokens: &[String], dict: &Dictionary, model: &TfidfModel) -> FeatureVector {
    let mut counts: HashMap<u32, (usize, &str)> = HashMap::new();
    for t in tokens {
        if let Some(c) = dict.column(t) {
            counts.entry(c).or_insert((0, t)).0 += 1;
        }
    }
    FeatureVector::from_entries(
        counts
            .into_iter()
            .map(|(c, (n, t))| (c, n as f64 * model.idf(t)))
            .collect(),
    )
}

pub fn encode(
    tokens: &[String],
    dict: &Dictionary,
    model: &TfidfModel,
    encoding: &FeatureEncoding,
) -> FeatureVector {
    let v = match encoding.weighting {
        Weighting::TfIdf => vectorize(tokens, dict, model),
        Weighting::Counts => {
            FeatureVector::from_entries(tokens.iter().filter_map(|t| Some((dict.column(t)?, 1.0))).collect())
        }
    };
    if encoding.l2_normalize {
        v.l2_normalized()
    } else {
        v
    }
}

/// Labeled feature vectors.
pub type Labeled = Vec<(FeatureVector, CategoryCode)>;

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn dictionary_min_count_one_has_every_token() {
        let d = Dictionary::build([toks("b a"), toks("c a")], 1);
        assert_eq!(d.tokens(), ["a", "b", "c"]);
        assert_eq!(d.column("a"), Some(0));
    }

    #[test]
    fn dictionary_matches_brute_force_counter() {
        let docs = [
            toks("rust rust go"),
            toks("go java"),
            toks("java rust sql"),
            toks("sql sql"),
            toks("excel"),
        ];
        let d = Dictionary::build(&docs, 2);
        let mut expected: Vec<(String, usize)> = Vec::new();
        let all: Vec<&String> = docs.iter().flatten().collect();
        let mut distinct = all.clone();
        distinct.sort();
        distinct.dedup();
        for t in distinct {
            let n = all.iter().filter(|x| **x == t).count();
            if n >= 2 {
                expected.push((t.clone(), n));
            }
        }
        expected.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let names: Vec<_> = expected.into_iter().map(|e| e.0).collect();
        assert_eq!(d.tokens(), names.as_slice());
        assert_eq!(d.tokens(), ["rust", "sql", "go", "java"]);
    }

    #[test]
    fn dictionary_serde_rebuilds_index() {
        let d = Dictionary::build([toks("x y y")], 1);
        let back: Dictionary = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.column("y"), Some(0));
    }

    #[test]
    fn vectorize_examples() {
        let corpus = [toks("a b"), toks("b c"), toks("c d")];
        let m = TfidfModel::fit(&corpus).unwrap();
        let d = Dictionary::build(&corpus, 2);
        assert!(vectorize(&toks("a d zz"), &d, &m).is_empty());
        let v = vectorize(&toks("b b b"), &d, &m);
        assert_eq!(v.len(), 1);
        assert_eq!(v.get(d.column("b").unwrap()), 3.0 * m.idf("b"));
        // b: df 2 of 3 -> ln(4/3)+1; c likewise; a is out of dictionary.
        let v = vectorize(&toks("a b c c"), &d, &m);
        let idf = (4.0f64 / 3.0).ln() + 1.0;
        assert!((v.get(d.column("b").unwrap()) - idf).abs() < 1e-15);
        assert!((v.get(d.column("c").unwrap()) - 2.0 * idf).abs() < 1e-15);
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn encode_counts_and_normalizes() {
        let corpus = [toks("a b")];
        let m = TfidfModel::fit(&corpus).unwrap();
        let d = Dictionary::build(&corpus, 1);
        let enc = FeatureEncoding {
            weighting: Weighting::Counts,
            l2_normalize: false,
        };
        let v = encode(&toks("a a b"), &d, &m, &enc);
        assert_eq!(v.get(d.column("a").unwrap()), 2.0);
        let v = encode(&toks("a a b"), &d, &m, &FeatureEncoding::default());
        assert!((v.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn squared_distance_merges_columns() {
        let x = FeatureVector::from_entries(vec![(0, 1.0), (3, 2.0)]);
        let z = FeatureVector::from_entries(vec![(1, 1.0), (3, -1.0)]);
        assert_eq!(x.squared_distance(&z), 1.0 + 1.0 + 9.0);
        assert_eq!(x.squared_distance(&x), 0.0);
        assert_eq!(x.squared_distance(&FeatureVector::default()), 5.0);
    }
}
