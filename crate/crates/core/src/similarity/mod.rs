//! TF-IDF weighting and the thresholded word-embedding cosine (WE-cos)
//! between documents and category descriptions.
//!
//! For weighted documents `a` and `b`, every token pair `(g, k)` whose
//! embedding similarity `H` exceeds `p` contributes `H * T_a(g) * T_b(k)`.
//! The score is the cross sum divided by the square roots of the two self
//! sums built the same way.

mod assign;
mod grid;
mod tfidf;

pub use assign::{assign_candidate, AssignmentBatch, CandidateLabel, CategoryIndex};
pub use grid::{
    grid_p, grid_p_documents, AcceptAll, GridPReport, GridPRow, GroundTruthOracle, JudgementOracle, OracleError,
    RejectAll,
};
pub use tfidf::{TfidfModel, WeightedDoc};

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingTable;
use crate::taxonomy::{CategoryCode, Taxonomy};
use crate::text_prep::Document;

#[derive(Debug, thiserror::Error)]
pub enum SimilarityError {
    #[error("cannot fit TF-IDF on an empty corpus")]
    EmptyCorpus,
    #[error("document `{0}` has no tokens")]
    EmptyDocument(String),
    #[error("document `{0}` has invalid weight {1}")]
    BadWeight(String, f64),
    #[error("threshold p must lie in [0, 1), got {0}")]
    BadThreshold(f64),
    #[error("no categories to score against")]
    NoCategories,
}

pub const DEFAULT_P: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    /// Token pairs count only when their similarity is strictly above `p`.
    pub p: f64,
    /// Worker threads for batch scoring; `None` uses the global pool.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            p: DEFAULT_P,
            threads: None,
        }
    }
}

impl SimilarityConfig {
    pub fn with_p(p: f64) -> Result<Self, SimilarityError> {
        let cfg = Self {
            p,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimilarityError> {
        if (0.0..1.0).contains(&self.p) {
            Ok(())
        } else {
            Err(SimilarityError::BadThreshold(self.p))
        }
    }
}

/// Thresholded pair sum `Σ H·T(g)·T(k)` and the number of admitted pairs.
pub fn pair_sum(a: &WeightedDoc, b: &WeightedDoc, emb: &EmbeddingTable, p: f64) -> (f64, usize) {
    let mut sum = 0.0;
    let mut pairs = 0;
    for (g, wg) in a.weights() {
        for (k, wk) in b.weights() {
            let h = emb.pair_similarity(g, k);
            if h > p {
                sum += h * wg * wk;
                pairs += 1;
            }
        }
    }
    (sum, pairs)
}

/// Pair counts behind one WE-cos evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeCosTrace {
    pub score: f64,
    pub cross_pairs: usize,
    pub self_pairs_a: usize,
    pub self_pairs_b: usize,
}

pub fn we_cos_traced(
    a: &WeightedDoc,
    b: &WeightedDoc,
    emb: &EmbeddingTable,
    cfg: &SimilarityConfig,
) -> WeCosTrace {
    let (cross, cross_pairs) = pair_sum(a, b, emb, cfg.p);
    let (self_a, self_pairs_a) = pair_sum(a, a, emb, cfg.p);
    let (self_b, self_pairs_b) = pair_sum(b, b, emb, cfg.p);
    WeCosTrace {
        score: ratio(cross, self_a, self_b),
        cross_pairs,
        self_pairs_a,
        self_pairs_b,
    }
}

/// WE-cos similarity. Not clamped: thresholding can push a score above 1.
pub fn we_cos(a: &WeightedDoc, b: &WeightedDoc, emb: &EmbeddingTable, cfg: &SimilarityConfig) -> f64 {
    we_cos_traced(a, b, emb, cfg).score
}

fn ratio(cross: f64, self_a: f64, self_b: f64) -> f64 {
    if self_a <= 0.0 || self_b <= 0.0 {
        0.0
    } else {
        cross / (self_a.sqrt() * self_b.sqrt())
    }
}

/// Fits document frequencies on the postings plus the active category
/// descriptions so both sides of the comparison share one model.
pub fn fit_reference_model(docs: &[Document], taxonomy: &Taxonomy) -> Result<TfidfModel, SimilarityError> {
    TfidfModel::fit(
        docs.iter()
            .map(|d| d.tokens.as_slice())
            .chain(taxonomy.active_nodes().map(|n| n.description_tokens.as_slice())),
    )
}

/// Weighted descriptions of the active leaves, in code order.
pub fn weigh_categories(
    taxonomy: &Taxonomy,
    model: &TfidfModel,
) -> Result<Vec<(CategoryCode, WeightedDoc)>, SimilarityError> {
    taxonomy
        .active_nodes()
        .map(|n| Ok((n.code.clone(), model.weigh(&n.code.to_string(), &n.description_tokens)?)))
        .collect()
}
