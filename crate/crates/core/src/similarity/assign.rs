use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pair_sum, ratio, we_cos, SimilarityConfig, SimilarityError, WeightedDoc};
use crate::embedding::{unit_cosine, EmbeddingTable};
use crate::taxonomy::CategoryCode;

/// Best-scoring category for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateLabel {
    pub doc_id: String,
    pub code: CategoryCode,
    pub score: f64,
    /// Second-best score; 0 when only one category was scored.
    pub runner_up_score: f64,
}

/// Scores above this are counted as over-unity diagnostics; smaller excess is
/// rounding noise on self-identical pairs.
const OVER_UNITY: f64 = 1.0 + 1e-9;

#[derive(Default)]
struct Best {
    code: Option<usize>,
    score: f64,
    runner_up: f64,
}

impl Best {
    // Categories arrive in code order and only a strictly larger score
    // replaces the leader, so ties keep the lowest code.
    fn offer(&mut self, idx: usize, score: f64) {
        if self.code.is_none() {
            self.code = Some(idx);
            self.score = score;
        } else if score > self.score {
            self.runner_up = self.score;
            self.code = Some(idx);
            self.score = score;
        } else if score > self.runner_up {
            self.runner_up = score;
        }
    }
}

/// Reference argmax: evaluates `we_cos` against every category independently.
pub fn assign_candidate(
    doc: &WeightedDoc,
    categories: &[(CategoryCode, WeightedDoc)],
    emb: &EmbeddingTable,
    cfg: &SimilarityConfig,
) -> Result<CandidateLabel, SimilarityError> {
    cfg.validate()?;
    if categories.is_empty() {
        return Err(SimilarityError::NoCategories);
    }
    let mut order: Vec<usize> = (0..categories.len()).collect();
    order.sort_by(|&a, &b| categories[a].0.cmp(&categories[b].0));
    let mut best = Best::default();
    for i in order {
        best.offer(i, we_cos(doc, &categories[i].1, emb, cfg));
    }
    let i = best.code.expect("nonempty");
    Ok(CandidateLabel {
        doc_id: doc.doc_id.clone(),
        code: categories[i].0.clone(),
        score: best.score,
        runner_up_score: best.runner_up,
    })
}

struct PreparedCategory {
    code: CategoryCode,
    entries: Vec<(u32, f64)>,
    self_sum: f64,
}

/// Category descriptions prepared for repeated scoring under one threshold.
///
/// Category self sums are computed once, and each document's token
/// similarities against the shared category vocabulary are computed once and
/// reused for every category.
pub struct CategoryIndex<'e> {
    emb: &'e EmbeddingTable,
    cfg: SimilarityConfig,
    vocab: Vec<String>,
    units: Vec<Option<&'e [f64]>>,
    categories: Vec<PreparedCategory>,
}

/// Candidates for a batch plus the count of scores observed above one.
#[derive(Debug, Clone, Default)]
pub struct AssignmentBatch {
    pub candidates: Vec<CandidateLabel>,
    pub over_unity: usize,
}

impl<'e> CategoryIndex<'e> {
    pub fn new(
        categories: &[(CategoryCode, WeightedDoc)],
        emb: &'e EmbeddingTable,
        cfg: SimilarityConfig,
    ) -> Result<Self, SimilarityError> {
        cfg.validate()?;
        if categories.is_empty() {
            return Err(SimilarityError::NoCategories);
        }
        let mut sorted: Vec<&(CategoryCode, WeightedDoc)> = categories.iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        let mut ids: HashMap<&str, u32> = HashMap::new();
        let mut vocab = Vec::new();
        let mut prepared = Vec::with_capacity(sorted.len());
        for (code, doc) in sorted {
            let entries = doc
                .weights()
                .iter()
                .map(|(t, w)| {
                    let id = *ids.entry(t.as_str()).or_insert_with(|| {
                        vocab.push(t.clone());
                        (vocab.len() - 1) as u32
                    });
                    (id, *w)
                })
                .collect();
            prepared.push(PreparedCategory {
                code: code.clone(),
                entries,
                self_sum: pair_sum(doc, doc, emb, cfg.p).0,
            });
        }
        let units = vocab.iter().map(|t| emb.unit(t)).collect();
        Ok(Self {
            emb,
            cfg,
            vocab,
            units,
            categories: prepared,
        })
    }

    pub fn config(&self) -> &SimilarityConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// All category scores for one document, in code order.
    pub fn scores(&self, doc: &WeightedDoc) -> Vec<(CategoryCode, f64)> {
        let sims = self.similarity_rows(doc);
        let self_doc = pair_sum(doc, doc, self.emb, self.cfg.p).0;
        self.categories
            .iter()
            .map(|c| (c.code.clone(), self.score_one(doc, &sims, self_doc, c)))
            .collect()
    }

    pub fn assign(&self, doc: &WeightedDoc) -> CandidateLabel {
        let sims = self.similarity_rows(doc);
        let self_doc = pair_sum(doc, doc, self.emb, self.cfg.p).0;
        let mut best = Best::default();
        for (i, c) in self.categories.iter().enumerate() {
            best.offer(i, self.score_one(doc, &sims, self_doc, c));
        }
        let i = best.code.expect("index is nonempty");
        CandidateLabel {
            doc_id: doc.doc_id.clone(),
            code: self.categories[i].code.clone(),
            score: best.score,
            runner_up_score: best.runner_up,
        }
    }

    /// Scores a batch in parallel, preserving input order.
    pub fn assign_all(&self, docs: &[WeightedDoc]) -> AssignmentBatch {
        let run = || docs.par_iter().map(|d| self.assign(d)).collect::<Vec<_>>();
        let candidates = match self.cfg.threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map(|pool| pool.install(run))
                .unwrap_or_else(|_| run()),
            None => run(),
        };
        let over_unity = candidates.iter().filter(|c| c.score > OVER_UNITY).count();
        if over_unity > 0 {
            log::debug!("{over_unity} WE-cos scores above 1");
        }
        AssignmentBatch {
            candidates,
            over_unity,
        }
    }

    /// Thresholded similarity of each document token to each vocabulary
    /// entry; excluded pairs are stored as zero.
    fn similarity_rows(&self, doc: &WeightedDoc) -> Vec<f64> {
        let v = self.vocab.len();
        let mut rows = vec![0.0; doc.len() * v];
        for (g, (tok, _)) in doc.weights().iter().enumerate() {
            let unit = self.emb.unit(tok);
            let row = &mut rows[g * v..(g + 1) * v];
            for (k, slot) in row.iter_mut().enumerate() {
                let h = if *tok == self.vocab[k] {
                    1.0
                } else {
                    match (unit, self.units[k]) {
                        (Some(a), Some(b)) => unit_cosine(a, b),
                        _ => 0.0,
                    }
                };
                if h > self.cfg.p {
                    *slot = h;
                }
            }
        }
        rows
    }

    fn score_one(&self, doc: &WeightedDoc, sims: &[f64], self_doc: f64, c: &PreparedCategory) -> f64 {
        let v = self.vocab.len();
        let mut cross = 0.0;
        for (g, (_, wg)) in doc.weights().iter().enumerate() {
            let row = &sims[g * v..(g + 1) * v];
            for &(k, wk) in &c.entries {
                let h = row[k as usize];
                if h != 0.0 {
                    cross += h * wg * wk;
                }
            }
        }
        ratio(cross, self_doc, c.self_sum)
    }
}
