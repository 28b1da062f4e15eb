use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::SimilarityError;

/// Document frequencies over a reference corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    n_docs: usize,
    df: BTreeMap<String, usize>,
}

impl TfidfModel {
    pub fn fit<I, D>(docs: I) -> Result<Self, SimilarityError>
    where
        I: IntoIterator<Item = D>,
        D: AsRef<[String]>,
    {
        let mut n_docs = 0;
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in docs {
            n_docs += 1;
            let tokens = doc.as_ref();
            let mut seen: Vec<&str> = tokens.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in &seen {
                match df.get_mut(*t) {
                    Some(c) => *c += 1,
                    None => {
                        df.insert((*t).to_string(), 1);
                    }
                }
            }
        }
        if n_docs == 0 {
            return Err(SimilarityError::EmptyCorpus);
        }
        Ok(Self { n_docs, df })
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    /// Document frequency; zero for tokens unseen at fit time.
    pub fn df(&self, token: &str) -> usize {
        self.df.get(token).copied().unwrap_or(0)
    }

    pub fn vocabulary_len(&self) -> usize {
        self.df.len()
    }

    /// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, token: &str) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.df(token) as f64)).ln() + 1.0
    }

    /// Raw term count times smoothed idf for every distinct token.
    pub fn weigh(&self, doc_id: &str, tokens: &[String]) -> Result<WeightedDoc, SimilarityError> {
        if tokens.is_empty() {
            return Err(SimilarityError::EmptyDocument(doc_id.to_string()));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
        let mut weights: Vec<(String, f64)> = counts
            .into_iter()
            .map(|(t, c)| (t.to_string(), c as f64 * self.idf(t)))
            .collect();
        weights.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(WeightedDoc {
            doc_id: doc_id.to_string(),
            weights,
        })
    }
}

/// Sparse token weights of one document, sorted by token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedDoc {
    pub doc_id: String,
    weights: Vec<(String, f64)>,
}

impl WeightedDoc {
    /// Builds from arbitrary `(token, weight)` pairs. Zero weights are dropped
    /// and repeated tokens summed.
    pub fn from_weights<I, S>(doc_id: impl Into<String>, weights: I) -> Result<Self, SimilarityError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let doc_id = doc_id.into();
        let mut map: BTreeMap<String, f64> = BTreeMap::new();
        for (t, w) in weights {
            if !w.is_finite() || w < 0.0 {
                return Err(SimilarityError::BadWeight(doc_id, w));
            }
            *map.entry(t.into()).or_default() += w;
        }
        Ok(Self {
            doc_id,
            weights: map.into_iter().filter(|&(_, w)| w > 0.0).collect(),
        })
    }

    pub fn weights(&self) -> &[(String, f64)] {
        &self.weights
    }

    pub fn weight(&self, token: &str) -> f64 {
        self.weights
            .binary_search_by(|(t, _)| t.as_str().cmp(token))
            .map(|i| self.weights[i].1)
            .unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            doc_id: self.doc_id.clone(),
            weights: self.weights.iter().map(|(t, w)| (t.clone(), w * s)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn fit_examples() {
        let m = TfidfModel::fit([toks("a b")]).unwrap();
        assert_eq!((m.df("a"), m.df("b"), m.n_docs()), (1, 1, 1));
        let m = TfidfModel::fit([toks("a"), toks("a b")]).unwrap();
        assert_eq!((m.df("a"), m.df("b")), (2, 1));
        assert!(matches!(
            TfidfModel::fit(Vec::<Vec<String>>::new()),
            Err(SimilarityError::EmptyCorpus)
        ));
    }

    #[test]
    fn fit_matches_set_count_oracle() {
        let docs: Vec<Vec<String>> = [
            "a b c a", "b d", "e", "a a a", "c d e f", "f g", "g h a", "b", "h h h b", "c",
        ]
        .iter()
        .map(|s| toks(s))
        .collect();
        let m = TfidfModel::fit(&docs).unwrap();
        let vocab: BTreeSet<&String> = docs.iter().flatten().collect();
        for t in vocab {
            let expected = docs
                .iter()
                .filter(|d| d.iter().collect::<BTreeSet<_>>().contains(t))
                .count();
            assert_eq!(m.df(t), expected, "{t}");
        }
        assert_eq!(m.n_docs(), 10);
    }

    #[test]
    fn weigh_examples() {
        let m = TfidfModel::fit([toks("a x"), toks("a y"), toks("a z")]).unwrap();
        let w = m.weigh("d", &toks("a")).unwrap();
        assert_eq!(w.weight("a"), 1.0);
        // unseen token, count 2, N = 3: 2 * (ln 4 + 1) = 4.772588722239781
        let w = m.weigh("d", &toks("q q")).unwrap();
        assert!((w.weight("q") - 4.772_588_722_239_781).abs() < 1e-12);
        let one = m.weigh("d", &toks("x")).unwrap().weight("x");
        let two = m.weigh("d", &toks("x x")).unwrap().weight("x");
        assert_eq!(two, 2.0 * one);
        assert!(m.weigh("d", &[]).is_err());
    }

    #[test]
    fn weights_are_positive_and_sorted() {
        let m = TfidfModel::fit([toks("b a c")]).unwrap();
        let w = m.weigh("d", &toks("c b a b zz")).unwrap();
        let names: Vec<_> = w.weights().iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(names, ["a", "b", "c", "zz"]);
        assert!(w.weights().iter().all(|&(_, x)| x > 0.0));
    }
}
