use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{fit_reference_model, weigh_categories, CategoryIndex, SimilarityConfig, SimilarityError, WeightedDoc};
use crate::embedding::EmbeddingTable;
use crate::taxonomy::{CategoryCode, Taxonomy};
use crate::text_prep::Document;

#[derive(Debug, Clone, thiserror::Error)]
pub enum OracleError {
    #[error("oracle unavailable: {0}")]
    Unavailable(String),
}

/// Source of correct/incorrect judgements for a proposed label.
pub trait JudgementOracle {
    fn judge(&mut self, doc_id: &str, code: &CategoryCode) -> Result<bool, OracleError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AcceptAll;

#[derive(Debug, Clone, Copy, Default)]
pub struct RejectAll;

impl JudgementOracle for AcceptAll {
    fn judge(&mut self, _: &str, _: &CategoryCode) -> Result<bool, OracleError> {
        Ok(true)
    }
}

impl JudgementOracle for RejectAll {
    fn judge(&mut self, _: &str, _: &CategoryCode) -> Result<bool, OracleError> {
        Ok(false)
    }
}

/// Accepts a label exactly when it matches the known code. Documents missing
/// from the truth table make the oracle unavailable.
#[derive(Debug, Clone, Default)]
pub struct GroundTruthOracle {
    truth: HashMap<String, CategoryCode>,
}

impl GroundTruthOracle {
    pub fn new(truth: HashMap<String, CategoryCode>) -> Self {
        Self { truth }
    }

    pub fn truth(&self, doc_id: &str) -> Option<&CategoryCode> {
        self.truth.get(doc_id)
    }
}

impl FromIterator<(String, CategoryCode)> for GroundTruthOracle {
    fn from_iter<I: IntoIterator<Item = (String, CategoryCode)>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

impl JudgementOracle for GroundTruthOracle {
    fn judge(&mut self, doc_id: &str, code: &CategoryCode) -> Result<bool, OracleError> {
        self.truth
            .get(doc_id)
            .map(|t| t == code)
            .ok_or_else(|| OracleError::Unavailable(format!("no judgement for `{doc_id}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPRow {
    pub p: f64,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Threshold study results, highest `p` first. `aborted` carries the oracle
/// failure when the run stopped early; `rows` then holds the completed prefix.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridPReport {
    pub rows: Vec<GridPRow>,
    pub aborted: Option<String>,
}

impl GridPReport {
    pub fn best(&self) -> Option<&GridPRow> {
        self.rows
            .iter()
            .fold(None, |best: Option<&GridPRow>, r| match best {
                Some(b) if b.accuracy >= r.accuracy => Some(b),
                _ => Some(r),
            })
    }
}

impl fmt::Display for GridPReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8}{:<10}{}", "Method", "p", "Accuracy")?;
        for r in &self.rows {
            writeln!(f, "{:<8}{:<10}{:.3}", "WE-cos", format!("p={}", r.p), r.accuracy)?;
        }
        if let Some(e) = &self.aborted {
            writeln!(f, "aborted: {e}")?;
        }
        Ok(())
    }
}

/// Runs candidate assignment over `sample` at each threshold and asks the
/// oracle whether each candidate is right.
pub fn grid_p(
    sample: &[WeightedDoc],
    categories: &[(CategoryCode, WeightedDoc)],
    emb: &EmbeddingTable,
    p_values: &[f64],
    threads: Option<usize>,
    oracle: &mut dyn JudgementOracle,
) -> Result<GridPReport, SimilarityError> {
    let mut ps = p_values.to_vec();
    for &p in &ps {
        SimilarityConfig::with_p(p)?;
    }
    ps.sort_by(|a, b| b.total_cmp(a));
    ps.dedup();
    let mut report = GridPReport::default();
    for p in ps {
        let index = CategoryIndex::new(categories, emb, SimilarityConfig { p, threads })?;
        let batch = index.assign_all(sample);
        let mut correct = 0;
        for c in &batch.candidates {
            match oracle.judge(&c.doc_id, &c.code) {
                Ok(true) => correct += 1,
                Ok(false) => {}
                Err(e) => {
                    report.aborted = Some(e.to_string());
                    return Ok(report);
                }
            }
        }
        let total = sample.len();
        report.rows.push(GridPRow {
            p,
            correct,
            total,
            accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        });
    }
    Ok(report)
}

/// [`grid_p`] over raw documents, weighted against the same reference corpus
/// module 1 uses.
pub fn grid_p_documents(
    docs: &[Document],
    taxonomy: &Taxonomy,
    emb: &EmbeddingTable,
    p_values: &[f64],
    threads: Option<usize>,
    oracle: &mut dyn JudgementOracle,
) -> Result<GridPReport, SimilarityError> {
    let model = fit_reference_model(docs, taxonomy)?;
    let sample = docs
        .iter()
        .map(|d| model.weigh(&d.id, &d.tokens))
        .collect::<Result<Vec<_>, _>>()?;
    let categories = weigh_categories(taxonomy, &model)?;
    grid_p(&sample, &categories, emb, p_values, threads, oracle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(s: &str) -> CategoryCode {
        s.parse().unwrap()
    }

    fn fixture() -> (Vec<WeightedDoc>, Vec<(CategoryCode, WeightedDoc)>) {
        let wd = |id: &str, t: &str| WeightedDoc::from_weights(id, [(t, 1.0)]).unwrap();
        (
            vec![wd("d1", "a"), wd("d2", "b"), wd("d3", "c")],
            vec![(code("1-01-01-01"), wd("x", "a")), (code("1-01-01-02"), wd("y", "b"))],
        )
    }

    #[test]
    fn accept_and_reject_all() {
        let (docs, cats) = fixture();
        let e = EmbeddingTable::default();
        let ps = [0.4, 0.9, 0.6, 0.8];
        let r = grid_p(&docs, &cats, &e, &ps, None, &mut AcceptAll).unwrap();
        assert_eq!(r.rows.iter().map(|r| r.p).collect::<Vec<_>>(), [0.9, 0.8, 0.6, 0.4]);
        assert!(r.rows.iter().all(|r| r.accuracy == 1.0));
        let r = grid_p(&docs, &cats, &e, &ps, None, &mut RejectAll).unwrap();
        assert!(r.rows.iter().all(|r| r.accuracy == 0.0));
    }

    #[test]
    fn ground_truth_counts() {
        let (docs, cats) = fixture();
        let mut oracle: GroundTruthOracle = [
            ("d1".to_string(), code("1-01-01-01")),
            ("d2".to_string(), code("1-01-01-02")),
            ("d3".to_string(), code("1-01-01-02")),
        ]
        .into_iter()
        .collect();
        let r = grid_p(&docs, &cats, &EmbeddingTable::default(), &[0.8], None, &mut oracle).unwrap();
        // d3 shares nothing, so it ties at 0 and falls to the lowest code.
        assert_eq!(r.rows[0].correct, 2);
        assert!(r.to_string().contains("WE-cos  p=0.8     0.667"));
    }

    #[test]
    fn unavailable_oracle_keeps_partial_rows() {
        struct Flaky(usize);
        impl JudgementOracle for Flaky {
            fn judge(&mut self, _: &str, _: &CategoryCode) -> Result<bool, OracleError> {
                self.0 += 1;
                if self.0 > 4 {
                    Err(OracleError::Unavailable("judge pool offline".into()))
                } else {
                    Ok(true)
                }
            }
        }
        let (docs, cats) = fixture();
        let r = grid_p(&docs, &cats, &EmbeddingTable::default(), &[0.9, 0.4], None, &mut Flaky(0)).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].p, 0.9);
        assert!(r.aborted.unwrap().contains("offline"));
    }

    #[test]
    fn bad_p_rejected_up_front() {
        let (docs, cats) = fixture();
        assert!(grid_p(&docs, &cats, &EmbeddingTable::default(), &[0.8, 1.0], None, &mut AcceptAll).is_err());
    }
}
