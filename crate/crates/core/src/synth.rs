//! Synthetic corpora with known labels, for exercising the full loop without
//! real postings or human judges.
//!
//! Categories come in confusable pairs. Each category owns core tokens (its
//! description), synonyms of those, and signature tokens that have no
//! embedding. Core tokens of paired categories have cosine 0.6, synonyms sit
//! at about 0.87 from their core token, so a low threshold admits spurious
//! cross-category pairs while a very high one loses the synonyms. Signature
//! tokens are invisible to WE-cos but learnable by a classifier. Generic
//! filler tokens lean toward a few attractor categories at cosine about 0.59.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingError, EmbeddingTable};
use crate::io::{self, RecordError};
use crate::similarity::GroundTruthOracle;
use crate::taxonomy::{CategoryCode, Taxonomy, TaxonomyError};
use crate::text_prep::{Document, Preprocessor, RawPosting};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Number of leaf categories; must be even.
    pub categories: usize,
    pub docs_per_category: usize,
    pub core_tokens: usize,
    pub signature_tokens: usize,
    pub generic_tokens: usize,
    /// Per-coordinate standard deviation of embedding noise.
    pub noise: f64,
    /// Probability that a synonym replaces a core token in a document.
    pub synonym_rate: f64,
    /// Largest number of own and of partner description tokens per document.
    pub max_topic_tokens: usize,
    /// Fraction of documents carrying at most one signature token.
    pub weak_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            categories: 20,
            docs_per_category: 100,
            core_tokens: 8,
            signature_tokens: 6,
            generic_tokens: 60,
            noise: 0.004,
            synonym_rate: 0.5,
            max_topic_tokens: 4,
            weak_rate: 0.25,
            seed: 7,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("category count must be even and at least 2, got {0}")]
    BadCategoryCount(usize),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Io(#[from] RecordError),
}

pub struct SynthCorpus {
    pub config: SynthConfig,
    pub taxonomy: Taxonomy,
    /// Rows as `(code, label, description)` in code order.
    pub taxonomy_rows: Vec<(String, String, String)>,
    pub embeddings: EmbeddingTable,
    /// Embedding rows in the order they were generated.
    pub embedding_rows: Vec<(String, Vec<f64>)>,
    pub documents: Vec<Document>,
    pub truth: BTreeMap<String, CategoryCode>,
}

/// Digits spelled with the letters `a..=j`, so tokens pass the garbled-text
/// filter at ingest.
fn letters(n: usize, width: usize) -> String {
    format!("{n:0width$}").bytes().map(|b| char::from(b'a' + (b - b'0'))).collect()
}

fn core(k: usize, i: usize) -> String {
    format!("k{}q{}", letters(k, 2), letters(i, 2))
}

fn synonym(k: usize, i: usize) -> String {
    format!("k{}r{}", letters(k, 2), letters(i, 2))
}

fn signature(k: usize, i: usize) -> String {
    format!("k{}x{}", letters(k, 2), letters(i, 2))
}

fn generic(j: usize) -> String {
    format!("w{}", letters(j, 2))
}

/// Leaf code of category `k`: five leaves per top-level group.
pub fn leaf_code(k: usize) -> CategoryCode {
    CategoryCode::new(vec![(k / 5 + 1) as u32, 1, 1, (k % 5 + 1) as u32]).expect("valid code")
}

fn partner(k: usize) -> usize {
    k ^ 1
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

impl SynthCorpus {
    pub fn generate(config: SynthConfig) -> Result<Self, SynthError> {
        let c = config;
        if c.categories < 2 || c.categories % 2 == 1 {
            return Err(SynthError::BadCategoryCount(c.categories));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);

        // Basis layout: core, synonym offsets, generic.
        let n_core = c.categories * c.core_tokens;
        let dim = 2 * n_core + c.generic_tokens;
        let core_axis = |k: usize, i: usize| k * c.core_tokens + i;
        let noise = Normal::new(0.0, c.noise).expect("finite noise");
        let noisy = |base: Vec<f64>, rng: &mut ChaCha8Rng| {
            normalized(base.into_iter().map(|x| x + noise.sample(rng)).collect())
        };
        // cos(core(k), core(partner)) = 2a / (1 + a^2) = 0.6 at a = 1/3.
        let a = 1.0 / 3.0;
        // cos(synonym, core) = 1 / sqrt(1 + b^2) ≈ 0.87.
        let b = 0.566;
        let mut embedding_rows = Vec::new();
        for k in 0..c.categories {
            for i in 0..c.core_tokens {
                let mut v = vec![0.0; dim];
                v[core_axis(k, i)] = 1.0;
                v[core_axis(partner(k), i)] = a;
                let base = normalized(v);
                let mut s = base.clone();
                s[n_core + core_axis(k, i)] = b;
                embedding_rows.push((core(k, i), noisy(base, &mut rng)));
                embedding_rows.push((synonym(k, i), noisy(normalized(s), &mut rng)));
            }
        }
        // Generic tokens lean toward core tokens of a few attractor
        // categories (cosine about 0.59), which only matters once the
        // threshold drops below that.
        let d = 0.8;
        for j in 0..c.generic_tokens {
            let mut v = vec![0.0; dim];
            v[2 * n_core + j] = 1.0;
            let attractor = 2 * (j % 4) % c.categories;
            v[core_axis(attractor, (j / 4) % c.core_tokens)] = d;
            embedding_rows.push((generic(j), noisy(v, &mut rng)));
        }
        let embeddings = EmbeddingTable::from_vectors(dim, embedding_rows.clone())?;

        let mut taxonomy_rows = Vec::new();
        for top in 0..c.categories.div_ceil(5) {
            let t = top + 1;
            taxonomy_rows.push((format!("{t}"), format!("Group {t}"), String::new()));
            taxonomy_rows.push((format!("{t}-01"), format!("Group {t} field"), String::new()));
            taxonomy_rows.push((format!("{t}-01-01"), format!("Group {t} occupations"), String::new()));
        }
        for k in 0..c.categories {
            let description: Vec<String> = (0..c.core_tokens).map(|i| core(k, i)).collect();
            taxonomy_rows.push((leaf_code(k).to_string(), format!("Role {k:02}"), description.join(" ")));
        }
        taxonomy_rows.sort_by(|x, y| x.0.parse::<CategoryCode>().ok().cmp(&y.0.parse().ok()));
        let prep = Preprocessor::default();
        let taxonomy = Taxonomy::from_rows(taxonomy_rows.iter().map(|r| (r.0.as_str(), r.1.as_str(), r.2.as_str())), &prep)?;

        let mut documents = Vec::new();
        let mut truth = BTreeMap::new();
        for k in 0..c.categories {
            for n in 0..c.docs_per_category {
                let id = format!("p{k:02}{n:04}");
                let body = Self::body(&c, k, &mut rng);
                let raw = RawPosting::new(id.clone(), "Synthetic posting", body);
                let tokens = prep.tokens(&format!("{} {}", raw.title, raw.body));
                documents.push(Document {
                    id: id.clone(),
                    title: raw.title,
                    body: raw.body,
                    tokens,
                });
                truth.insert(id, leaf_code(k));
            }
        }
        Ok(Self {
            config,
            taxonomy,
            taxonomy_rows,
            embeddings,
            embedding_rows,
            documents,
            truth,
        })
    }

    fn body(c: &SynthConfig, k: usize, rng: &mut ChaCha8Rng) -> String {
        let mut words = Vec::new();
        let topic = |cat: usize, words: &mut Vec<String>, rng: &mut ChaCha8Rng| {
            let i = rng.random_range(0..c.core_tokens);
            words.push(if rng.random_bool(c.synonym_rate) {
                synonym(cat, i)
            } else {
                core(cat, i)
            });
        };
        for _ in 0..rng.random_range(0..=c.max_topic_tokens) {
            topic(k, &mut words, rng);
        }
        for _ in 0..rng.random_range(0..=c.max_topic_tokens) {
            topic(partner(k), &mut words, rng);
        }
        let sigs = if rng.random_bool(c.weak_rate) {
            rng.random_range(0..=1)
        } else {
            rng.random_range(2..=4)
        };
        for _ in 0..sigs {
            words.push(signature(k, rng.random_range(0..c.signature_tokens)));
        }
        let generics: Vec<usize> = (0..c.generic_tokens).collect();
        for _ in 0..rng.random_range(8..=14) {
            words.push(generic(*generics.choose(rng).expect("generic tokens exist")));
        }
        // Deterministic shuffle keeps the token multiset and varies order.
        for i in (1..words.len()).rev() {
            let j = rng.random_range(0..=i);
            words.swap(i, j);
        }
        words.join(" ")
    }

    pub fn oracle(&self) -> GroundTruthOracle {
        GroundTruthOracle::new(self.truth.iter().map(|(d, c)| (d.clone(), c.clone())).collect::<HashMap<_, _>>())
    }

    pub fn postings(&self) -> Vec<RawPosting> {
        self.documents
            .iter()
            .map(|d| RawPosting::new(d.id.clone(), d.title.clone(), d.body.clone()))
            .collect()
    }

    /// Writes `postings.jsonl`, `taxonomy.jsonl`, `embeddings.txt` and
    /// `truth.jsonl` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<(), SynthError> {
        #[derive(Serialize)]
        struct TaxRow<'a> {
            code: &'a str,
            label: &'a str,
            description: &'a str,
        }
        #[derive(Serialize)]
        struct TruthRow<'a> {
            doc_id: &'a str,
            code: &'a CategoryCode,
        }
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|source| RecordError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        io::write_jsonl(&dir.join("postings.jsonl"), &self.postings())?;
        let tax: Vec<TaxRow> = self
            .taxonomy_rows
            .iter()
            .map(|r| TaxRow {
                code: &r.0,
                label: &r.1,
                description: &r.2,
            })
            .collect();
        io::write_jsonl(&dir.join("taxonomy.jsonl"), &tax)?;
        let truth: Vec<TruthRow> = self.truth.iter().map(|(d, c)| TruthRow { doc_id: d, code: c }).collect();
        io::write_jsonl(&dir.join("truth.jsonl"), &truth)?;
        let mut text = format!("{} {}\n", self.embedding_rows.len(), self.embeddings.dim());
        for (t, v) in &self.embedding_rows {
            text.push_str(t);
            for x in v {
                text.push(' ');
                text.push_str(&x.to_string());
            }
            text.push('\n');
        }
        let path = dir.join("embeddings.txt");
        std::fs::write(&path, text).map_err(|source| RecordError::Io { path, source })?;
        Ok(())
    }
}
