//! Pre-trained word vectors in word2vec text layout.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("vector lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Token vectors of a single dimension, stored unit-normalized.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    /// Row-major unit vectors.
    data: Vec<f64>,
    warnings: usize,
}

impl EmbeddingTable {
    /// Builds a table from in-memory vectors with the same rules as `parse`:
    /// zero vectors are skipped and later duplicates ignored, both tallied as
    /// warnings.
    pub fn from_vectors<I, S>(dim: usize, vectors: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = Self {
            dim,
            ..Self::default()
        };
        for (i, (token, v)) in vectors.into_iter().enumerate() {
            if v.len() != dim {
                return Err(EmbeddingError::Parse {
                    line: i + 1,
                    message: format!("expected {dim} values, found {}", v.len()),
                });
            }
            table.insert(token.into(), v);
        }
        Ok(table)
    }

    fn insert(&mut self, token: String, v: Vec<f64>) {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() || self.index.contains_key(&token) {
            self.warnings += 1;
            return;
        }
        self.index.insert(token, self.index.len());
        self.data.extend(v.iter().map(|x| x / norm));
    }

    /// Parses the word2vec text layout: a `count dim` header followed by one
    /// `token v1 .. v_dim` line per entry.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, EmbeddingError> {
        let mut lines = reader.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, l)) => {
                    let l = l?;
                    if !l.trim().is_empty() {
                        break l;
                    }
                }
                None => {
                    return Err(EmbeddingError::Parse {
                        line: 1,
                        message: "missing header".into(),
                    })
                }
            }
        };
        let bad_header = || EmbeddingError::Parse {
            line: 1,
            message: format!("header must be `count dim`, got `{header}`"),
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(bad_header());
        }
        let _count: usize = fields[0].parse().map_err(|_| bad_header())?;
        let dim: usize = fields[1].parse().map_err(|_| bad_header())?;
        if dim == 0 {
            return Err(bad_header());
        }
        let mut table = Self {
            dim,
            ..Self::default()
        };
        for (i, line) in lines {
            let line = line?;
            let line_no = i + 1;
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let v = parts
                .map(|p| {
                    p.parse::<f64>().map_err(|_| EmbeddingError::Parse {
                        line: line_no,
                        message: format!("unparsable number `{p}`"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if v.len() != dim {
                return Err(EmbeddingError::Parse {
                    line: line_no,
                    message: format!("expected {dim} values, found {}", v.len()),
                });
            }
            table.insert(token.to_string(), v);
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        Self::parse(BufReader::new(File::open(path)?))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Zero vectors and duplicate tokens skipped while loading.
    pub fn warnings(&self) -> usize {
        self.warnings
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Unit-normalized vector of `token`.
    pub fn unit(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Similarity of two tokens: the cosine of their vectors when both are
    /// known, otherwise 1 for identical tokens and 0 for different ones.
    pub fn pair_similarity(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        match (self.unit(a), self.unit(b)) {
            (Some(u), Some(v)) => unit_cosine(u, v),
            _ => 0.0,
        }
    }
}

pub(crate) fn unit_cosine(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0)
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::LengthMismatch(a.len(), b.len()));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(EmbeddingError::ZeroNorm);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<EmbeddingTable, EmbeddingError> {
        EmbeddingTable::parse(s.as_bytes())
    }

    #[test]
    fn parses_header_and_rows() {
        let t = parse("2 3\na 1 0 0\nb 0 1 0.5\n").unwrap();
        assert_eq!((t.len(), t.dim()), (2, 3));
        assert_eq!(t.unit("a").unwrap(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn short_row_reports_line() {
        match parse("2 3\na 1 0 0\nb 1 0\n") {
            Err(EmbeddingError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse("1 2\na 1 x\n") {
            Err(EmbeddingError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_vector_skipped_with_warning() {
        let t = parse("5 2\na 1 0\nb 0 1\nz 0 0\nc 1 1\nd -1 2\n").unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.warnings(), 1);
        assert!(!t.contains("z"));
    }

    #[test]
    fn duplicate_keeps_first() {
        let t = parse("2 2\na 1 0\na 0 1\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.warnings(), 1);
        assert_eq!(t.unit("a").unwrap(), [1.0, 0.0]);
    }

    #[test]
    fn bad_header() {
        assert!(parse("").is_err());
        assert!(parse("3\n").is_err());
        assert!(parse("1 0\n").is_err());
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        // 1/sqrt(2) to 20 digits: 0.70710678118654752440
        assert!((c - 0.707_106_781_186_547_524_4).abs() < 1e-15);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(EmbeddingError::ZeroNorm)));
        assert!(cosine(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn oov_rules() {
        let t = parse("2 2\na 1 0\nb 1 1\n").unwrap();
        assert!((t.pair_similarity("a", "b") - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(t.pair_similarity("区块链", "区块链"), 1.0);
        assert_eq!(t.pair_similarity("区块链", "a"), 0.0);
        assert_eq!(t.pair_similarity("a", "zzz"), 0.0);
    }

    proptest! {
        #[test]
        fn cosine_self_is_one(v in prop::collection::vec(-10.0f64..10.0, 1..16)) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
            prop_assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn pair_similarity_symmetric_and_bounded(
            rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..8),
            a in 0usize..10, b in 0usize..10,
        ) {
            let t = EmbeddingTable::from_vectors(
                4,
                rows.into_iter().enumerate().map(|(i, v)| (format!("t{i}"), v)),
            ).unwrap();
            let (a, b) = (format!("t{a}"), format!("t{b}"));
            let s = t.pair_similarity(&a, &b);
            prop_assert_eq!(s, t.pair_similarity(&b, &a));
            prop_assert!((-1.0..=1.0).contains(&s));
            prop_assert_eq!(t.pair_similarity(&a, &a), 1.0);
        }
    }
}
