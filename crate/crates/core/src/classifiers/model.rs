use std::path::Path;

use serde::{Deserialize, Serialize};

use super::forest::{train_forest, Forest, ForestParams};
use super::svm::{train_svm, SvmModel, SvmParams};
use super::{encode, ClassifierError, Dictionary, FeatureEncoding, FeatureVector};
use crate::io;
use crate::similarity::TfidfModel;
use crate::taxonomy::CategoryCode;

pub const MODEL_FORMAT: &str = "jobcorpus-classifier";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ClassifierKind {
    Svm(SvmParams),
    Forest(ForestParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    /// Minimum corpus occurrence for a token to become a feature.
    pub min_count: usize,
    pub encoding: FeatureEncoding,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            kind: ClassifierKind::Svm(SvmParams::default()),
            min_count: 3,
            encoding: FeatureEncoding::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedClassifier {
    Svm(SvmModel),
    Forest(Forest),
}

/// A trained text classifier with everything needed to featurize new
/// documents. Serialized as versioned JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format: String,
    pub version: u32,
    pub dictionary: Dictionary,
    pub tfidf: TfidfModel,
    pub encoding: FeatureEncoding,
    pub classifier: TrainedClassifier,
}

impl Model {
    /// Fits the dictionary and document frequencies on the training tokens,
    /// then trains the configured classifier.
    pub fn train(labeled: &[(Vec<String>, CategoryCode)], config: &ClassifierConfig) -> Result<Self, ClassifierError> {
        if labeled.is_empty() {
            return Err(ClassifierError::EmptyData);
        }
        let dictionary = Dictionary::build(labeled.iter().map(|l| &l.0), config.min_count);
        let tfidf = TfidfModel::fit(labeled.iter().map(|l| &l.0)).map_err(|_| ClassifierError::EmptyData)?;
        let data: Vec<(FeatureVector, CategoryCode)> = labeled
            .iter()
            .map(|(t, c)| (encode(t, &dictionary, &tfidf, &config.encoding), c.clone()))
            .collect();
        let classifier = match &config.kind {
            ClassifierKind::Svm(p) => TrainedClassifier::Svm(train_svm(&data, p)?),
            ClassifierKind::Forest(p) => TrainedClassifier::Forest(train_forest(&data, dictionary.len(), p)?),
        };
        Ok(Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            dictionary,
            tfidf,
            encoding: config.encoding,
            classifier,
        })
    }

    pub fn featurize(&self, tokens: &[String]) -> FeatureVector {
        encode(tokens, &self.dictionary, &self.tfidf, &self.encoding)
    }

    pub fn predict_features(&self, x: &FeatureVector) -> CategoryCode {
        match &self.classifier {
            TrainedClassifier::Svm(m) => m.predict(x).clone(),
            TrainedClassifier::Forest(f) => f.predict(x).clone(),
        }
    }

    /// Predicted code plus a confidence score: the winning raw decision value
    /// for the SVM, the winning vote share for the forest.
    pub fn predict_scored(&self, tokens: &[String]) -> (CategoryCode, f64) {
        let x = self.featurize(tokens);
        match &self.classifier {
            TrainedClassifier::Svm(m) => {
                let code = m.predict(&x).clone();
                let k = m.classes.binary_search(&code).expect("predicted class exists");
                (code, m.binaries[k].decision_value(&x))
            }
            TrainedClassifier::Forest(f) => {
                let votes = f.votes(&x);
                let code = f.predict(&x).clone();
                let k = f.classes.binary_search(&code).expect("predicted class exists");
                (code, votes[k] as f64 / f.trees.len() as f64)
            }
        }
    }

    pub fn predict(&self, tokens: &[String]) -> CategoryCode {
        self.predict_features(&self.featurize(tokens))
    }

    pub fn classes(&self) -> &[CategoryCode] {
        match &self.classifier {
            TrainedClassifier::Svm(m) => &m.classes,
            TrainedClassifier::Forest(f) => &f.classes,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
        Ok(io::write_json(path.as_ref(), self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifierError> {
        let model: Model = io::read_json(path.as_ref())?;
        if model.format != MODEL_FORMAT {
            return Err(ClassifierError::ModelFile(format!("unexpected format `{}`", model.format)));
        }
        if model.version != MODEL_VERSION {
            return Err(ClassifierError::ModelFile(format!("unsupported version {}", model.version)));
        }
        Ok(model)
    }
}
