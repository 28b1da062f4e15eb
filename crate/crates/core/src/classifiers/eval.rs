use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forest::ForestParams;
use super::model::{ClassifierConfig, ClassifierKind, Model};
use super::smo::SmoParams;
use super::svm::SvmParams;
use super::{ClassifierError, FeatureEncoding, FeatureVector};
use crate::taxonomy::CategoryCode;

/// Fraction of `test` whose prediction equals the label.
pub fn evaluate<F>(predict: F, test: &[(FeatureVector, CategoryCode)]) -> Result<f64, ClassifierError>
where
    F: Fn(&FeatureVector) -> CategoryCode,
{
    if test.is_empty() {
        return Err(ClassifierError::EmptyTestSet);
    }
    let correct = test.iter().filter(|(x, c)| &predict(x) == c).count();
    Ok(correct as f64 / test.len() as f64)
}

/// Row indices of a train/test partition, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class split. A class with `n >= 2` rows puts `round(ratio * n)`
/// of them in training, clamped to `[1, n - 1]`; singleton classes go to
/// training only.
pub fn stratified_split(labels: &[CategoryCode], train_ratio: f64, seed: u64) -> Split {
    let mut by_class: BTreeMap<&CategoryCode, Vec<usize>> = BTreeMap::new();
    for (i, c) in labels.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split {
        train: Vec::new(),
        test: Vec::new(),
    };
    for (_, mut rows) in by_class {
        let n = rows.len();
        if n == 1 {
            split.train.push(rows[0]);
            continue;
        }
        rows.shuffle(&mut rng);
        let k = ((train_ratio * n as f64).round() as usize).clamp(1, n - 1);
        split.train.extend_from_slice(&rows[..k]);
        split.test.extend_from_slice(&rows[k..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    split
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridFamily {
    Svm,
    Forest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub svm_gammas: Vec<f64>,
    pub rf_trees: Vec<usize>,
    pub min_counts: Vec<usize>,
    pub train_ratio: f64,
    pub seed: u64,
    pub smo: SmoParams,
    /// Forest settings other than the tree count.
    pub forest: ForestParams,
    pub encoding: FeatureEncoding,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            svm_gammas: vec![0.006, 0.06, 0.6, 1.0],
            rf_trees: vec![100, 300, 500],
            min_counts: vec![1, 3, 5],
            train_ratio: 0.7,
            seed: 0,
            smo: SmoParams::default(),
            forest: ForestParams::default(),
            encoding: FeatureEncoding::default(),
        }
    }
}

impl GridSpec {
    fn cells(&self) -> Vec<(GridFamily, f64, usize)> {
        let mut out = Vec::new();
        for &m in &self.min_counts {
            for &g in &self.svm_gammas {
                out.push((GridFamily::Svm, g, m));
            }
        }
        for &m in &self.min_counts {
            for &t in &self.rf_trees {
                out.push((GridFamily::Forest, t as f64, m));
            }
        }
        out
    }

    /// Classifier configuration of one grid cell.
    pub fn config(&self, family: GridFamily, param: f64, min_count: usize) -> ClassifierConfig {
        let kind = match family {
            GridFamily::Svm => ClassifierKind::Svm(SvmParams {
                gamma: param,
                smo: self.smo,
            }),
            GridFamily::Forest => ClassifierKind::Forest(ForestParams {
                num_trees: param as usize,
                ..self.forest
            }),
        };
        ClassifierConfig {
            kind,
            min_count,
            encoding: self.encoding,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub family: GridFamily,
    /// Gamma for the SVM, tree count for the forest.
    pub param: f64,
    pub min_count: usize,
    pub dictionary_size: usize,
    pub accuracy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub cells: Vec<GridCell>,
    pub train_size: usize,
    pub test_size: usize,
}

fn better(a: &GridCell, b: &GridCell) -> bool {
    let (Some(x), Some(y)) = (a.accuracy, b.accuracy) else {
        return a.accuracy.is_some();
    };
    if x != y {
        return x > y;
    }
    if a.dictionary_size != b.dictionary_size {
        return a.dictionary_size < b.dictionary_size;
    }
    if a.param != b.param {
        return a.param < b.param;
    }
    a.family < b.family
}

impl GridReport {
    /// Highest accuracy; ties go to the smaller dictionary, then the smaller
    /// parameter.
    pub fn winner(&self, family: Option<GridFamily>) -> Option<&GridCell> {
        let mut best: Option<&GridCell> = None;
        for c in &self.cells {
            if c.accuracy.is_none() || family.is_some_and(|f| f != c.family) {
                continue;
            }
            if best.map_or(true, |b| better(c, b)) {
                best = Some(c);
            }
        }
        best
    }

    pub fn failures(&self) -> impl Iterator<Item = &GridCell> {
        self.cells.iter().filter(|c| c.error.is_some())
    }
}

impl fmt::Display for GridReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for family in [GridFamily::Forest, GridFamily::Svm] {
            let cells: Vec<&GridCell> = self.cells.iter().filter(|c| c.family == family).collect();
            if cells.is_empty() {
                continue;
            }
            let (title, head) = match family {
                GridFamily::Svm => ("SVM", "Gamma"),
                GridFamily::Forest => ("Random forest", "Number of Trees"),
            };
            writeln!(f, "Hyper-parameter tuning for {title} classifier")?;
            write!(f, "{head:<20}")?;
            for c in &cells {
                match family {
                    GridFamily::Svm => write!(f, "{:>9}", c.param)?,
                    GridFamily::Forest => write!(f, "{:>9}", c.param as usize)?,
                }
            }
            write!(f, "\n{:<20}", "Size of dictionary")?;
            for c in &cells {
                write!(f, "{:>9}", c.dictionary_size)?;
            }
            write!(f, "\n{:<20}", "Accuracy rate")?;
            for c in &cells {
                match c.accuracy {
                    Some(a) => write!(f, "{a:>9.4}")?,
                    None => write!(f, "{:>9}", "failed")?,
                }
            }
            writeln!(f)?;
            if let Some(w) = self.winner(Some(family)) {
                writeln!(
                    f,
                    "best: {head}={} dictionary={} accuracy={:.4}",
                    w.param,
                    w.dictionary_size,
                    w.accuracy.unwrap_or_default()
                )?;
            }
            writeln!(f)?;
        }
        for c in self.failures() {
            writeln!(
                f,
                "failed {:?} param={} min_count={}: {}",
                c.family,
                c.param,
                c.min_count,
                c.error.as_deref().unwrap_or("")
            )?;
        }
        Ok(())
    }
}

/// Trains every grid cell on one stratified split of `labeled` and scores it
/// on the held-out rows. Cells that fail are recorded, not fatal.
pub fn grid_search(labeled: &[(Vec<String>, CategoryCode)], spec: &GridSpec) -> Result<GridReport, ClassifierError> {
    if labeled.is_empty() {
        return Err(ClassifierError::EmptyData);
    }
    if !(spec.train_ratio > 0.0 && spec.train_ratio < 1.0) {
        return Err(ClassifierError::BadParameter(format!(
            "train ratio must lie in (0, 1), got {}",
            spec.train_ratio
        )));
    }
    let labels: Vec<CategoryCode> = labeled.iter().map(|l| l.1.clone()).collect();
    let split = stratified_split(&labels, spec.train_ratio, spec.seed);
    if split.test.is_empty() {
        return Err(ClassifierError::EmptyTestSet);
    }
    let train: Vec<(Vec<String>, CategoryCode)> = split.train.iter().map(|&i| labeled[i].clone()).collect();
    let test: Vec<&(Vec<String>, CategoryCode)> = split.test.iter().map(|&i| &labeled[i]).collect();

    let cells = spec
        .cells()
        .into_par_iter()
        .map(|(family, param, min_count)| {
            let cfg = spec.config(family, param, min_count);
            let mut cell = GridCell {
                family,
                param,
                min_count,
                dictionary_size: 0,
                accuracy: None,
                error: None,
            };
            match Model::train(&train, &cfg) {
                Ok(model) => {
                    cell.dictionary_size = model.dictionary.len();
                    let held: Vec<(FeatureVector, CategoryCode)> =
                        test.iter().map(|(t, c)| (model.featurize(t), c.clone())).collect();
                    match evaluate(|x| model.predict_features(x), &held) {
                        Ok(a) => cell.accuracy = Some(a),
                        Err(e) => cell.error = Some(e.to_string()),
                    }
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            cell
        })
        .collect();
    Ok(GridReport {
        cells,
        train_size: split.train.len(),
        test_size: split.test.len(),
    })
}
