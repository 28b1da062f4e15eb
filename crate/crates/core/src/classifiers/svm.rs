use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::Gram;
use super::smo::{binary_from_solution, solve, SmoParams, SvmBinaryModel};
use super::{ClassifierError, FeatureVector};
use crate::taxonomy::CategoryCode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub gamma: f64,
    #[serde(flatten)]
    pub smo: SmoParams,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            gamma: 0.6,
            smo: SmoParams::default(),
        }
    }
}

/// One-vs-rest multiclass SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub classes: Vec<CategoryCode>,
    pub binaries: Vec<SvmBinaryModel>,
    pub params: SvmParams,
}

impl SvmModel {
    /// Raw one-vs-rest decision values, aligned with `classes`.
    pub fn decision_values(&self, x: &FeatureVector) -> Vec<f64> {
        self.binaries.iter().map(|b| b.decision_value(x)).collect()
    }

    /// Class with the largest raw decision value; ties go to the lowest code.
    pub fn predict(&self, x: &FeatureVector) -> &CategoryCode {
        let values = self.decision_values(x);
        let mut best = 0;
        for (k, &v) in values.iter().enumerate().skip(1) {
            if v > values[best] {
                best = k;
            }
        }
        &self.classes[best]
    }
}

pub fn svm_predict(model: &SvmModel, x: &FeatureVector) -> CategoryCode {
    model.predict(x).clone()
}

/// Trains one binary per distinct class, sharing a single kernel matrix.
/// A single-class training set yields a constant model.
pub fn train_svm(data: &[(FeatureVector, CategoryCode)], params: &SvmParams) -> Result<SvmModel, ClassifierError> {
    params.smo.validate()?;
    if !(params.gamma > 0.0) {
        return Err(ClassifierError::BadParameter(format!("gamma must be positive, got {}", params.gamma)));
    }
    if data.is_empty() {
        return Err(ClassifierError::EmptyData);
    }
    let classes: Vec<CategoryCode> = data
        .iter()
        .map(|d| d.1.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if classes.len() == 1 {
        return Ok(SvmModel {
            classes,
            binaries: vec![SvmBinaryModel::constant(1.0, params.gamma)],
            params: *params,
        });
    }
    let points: Vec<FeatureVector> = data.iter().map(|d| d.0.clone()).collect();
    let gram = Gram::new(&points, params.gamma);
    let binaries = classes
        .par_iter()
        .map(|class| {
            let y: Vec<f64> = data.iter().map(|d| if &d.1 == class { 1.0 } else { -1.0 }).collect();
            let mut g = gram.share();
            let sol = solve(&mut g, &y, &params.smo);
            if !sol.converged {
                log::warn!("SMO for {class} hit the iteration cap");
            }
            binary_from_solution(&points, &y, &sol, params.gamma)
        })
        .collect();
    Ok(SvmModel {
        classes,
        binaries,
        params: *params,
    })
}
