//! Four-level occupation taxonomy with per-category descriptions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::io;
use crate::text_prep::Preprocessor;

pub const MAX_LEVEL: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum TaxonomyError {
    #[error("malformed category code `{0}`")]
    MalformedCode(String),
    #[error("line {line}: malformed category code `{code}`")]
    MalformedLine { line: usize, code: String },
    #[error("line {line}: duplicate code {code}")]
    DuplicateCode { line: usize, code: CategoryCode },
    #[error("line {line}: code {code} has no parent {parent}")]
    MissingParent {
        line: usize,
        code: CategoryCode,
        parent: CategoryCode,
    },
    #[error("line {line}: code {code} has an empty label")]
    EmptyLabel { line: usize, code: CategoryCode },
    #[error("line {line}: leaf {code} has no usable description tokens")]
    EmptyLeafDescription { line: usize, code: CategoryCode },
    #[error("unknown category code {0}")]
    UnknownCode(CategoryCode),
    #[error("{0} is not a level-4 category")]
    NotALeaf(CategoryCode),
    #[error(transparent)]
    Io(#[from] io::RecordError),
}

/// Hierarchical category code such as `2-02-10-03`.
///
/// Ordering is lexicographic over the numeric segments, which is the
/// canonical order used for every tie-break in the crate.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct CategoryCode(Vec<u32>);

impl CategoryCode {
    pub fn new(segments: Vec<u32>) -> Result<Self, TaxonomyError> {
        if segments.is_empty() || segments.len() > MAX_LEVEL {
            return Err(TaxonomyError::MalformedCode(format!("{segments:?}")));
        }
        Ok(Self(segments))
    }

    pub fn segments(&self) -> &[u32] {
        &self.0
    }

    pub fn level(&self) -> usize {
        self.0.len()
    }

    pub fn is_leaf(&self) -> bool {
        self.level() == MAX_LEVEL
    }

    pub fn parent(&self) -> Option<CategoryCode> {
        (self.level() > 1).then(|| Self(self.0[..self.0.len() - 1].to_vec()))
    }

    /// The level-`k` prefix, or `None` when `k` exceeds this code's level.
    pub fn prefix(&self, k: usize) -> Option<CategoryCode> {
        (1..=self.level()).contains(&k).then(|| Self(self.0[..k].to_vec()))
    }

    pub fn top_level(&self) -> CategoryCode {
        Self(vec![self.0[0]])
    }
}

impl fmt::Display for CategoryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0[0])?;
        for s in &self.0[1..] {
            write!(f, "-{s:02}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for CategoryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CategoryCode({self})")
    }
}

impl FromStr for CategoryCode {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TaxonomyError::MalformedCode(s.to_string());
        let segments = s
            .trim()
            .split('-')
            .map(|p| {
                if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(bad());
                }
                p.parse::<u32>().map_err(|_| bad())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(segments).map_err(|_| bad())
    }
}

impl From<CategoryCode> for String {
    fn from(c: CategoryCode) -> Self {
        c.to_string()
    }
}

impl TryFrom<String> for CategoryCode {
    type Error = TaxonomyError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyNode {
    pub code: CategoryCode,
    pub label: String,
    pub description: String,
    /// Label and description run through the document preprocessor.
    pub description_tokens: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct NodeRecord {
    code: String,
    label: String,
    #[serde(default)]
    description: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    nodes: BTreeMap<CategoryCode, TaxonomyNode>,
    active_leaves: BTreeSet<CategoryCode>,
}

impl Taxonomy {
    /// Builds a taxonomy from `(code, label, description)` rows, checking
    /// hierarchy closure. Every leaf starts out active.
    pub fn from_rows<I, S>(rows: I, prep: &Preprocessor) -> Result<Self, TaxonomyError>
    where
        I: IntoIterator<Item = (S, S, S)>,
        S: AsRef<str>,
    {
        let mut nodes = BTreeMap::new();
        let mut lines = BTreeMap::new();
        for (i, (code, label, description)) in rows.into_iter().enumerate() {
            let line = i + 1;
            let code: CategoryCode =
                code.as_ref()
                    .parse()
                    .map_err(|_| TaxonomyError::MalformedLine {
                        line,
                        code: code.as_ref().to_string(),
                    })?;
            let label = label.as_ref().trim().to_string();
            if label.is_empty() {
                return Err(TaxonomyError::EmptyLabel { line, code });
            }
            let description = description.as_ref().to_string();
            let description_tokens = prep.tokens(&format!("{label} {description}"));
            if code.is_leaf() && description_tokens.is_empty() {
                return Err(TaxonomyError::EmptyLeafDescription { line, code });
            }
            if nodes.contains_key(&code) {
                return Err(TaxonomyError::DuplicateCode { line, code });
            }
            lines.insert(code.clone(), line);
            nodes.insert(
                code.clone(),
                TaxonomyNode {
                    code,
                    label,
                    description,
                    description_tokens,
                },
            );
        }
        // Report the earliest offending line.
        let mut missing: Vec<_> = nodes
            .keys()
            .filter_map(|c| {
                let parent = c.parent()?;
                (!nodes.contains_key(&parent)).then(|| (lines[c], c.clone(), parent))
            })
            .collect();
        missing.sort();
        if let Some((line, code, parent)) = missing.into_iter().next() {
            return Err(TaxonomyError::MissingParent { line, code, parent });
        }
        let active_leaves = nodes.keys().filter(|c| c.is_leaf()).cloned().collect();
        Ok(Self {
            nodes,
            active_leaves,
        })
    }

    /// Loads a line-delimited record file with fields `code`, `label`,
    /// `description`.
    pub fn load(path: impl AsRef<Path>, prep: &Preprocessor) -> Result<Self, TaxonomyError> {
        let records: Vec<NodeRecord> = io::read_jsonl(path.as_ref())?;
        Self::from_rows(
            records.into_iter().map(|r| (r.code, r.label, r.description)),
            prep,
        )
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, code: &CategoryCode) -> Option<&TaxonomyNode> {
        self.nodes.get(code)
    }

    pub fn node(&self, code: &CategoryCode) -> Result<&TaxonomyNode, TaxonomyError> {
        self.get(code)
            .ok_or_else(|| TaxonomyError::UnknownCode(code.clone()))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &TaxonomyNode> {
        self.nodes.values()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TaxonomyNode> {
        self.nodes.values().filter(|n| n.code.is_leaf())
    }

    pub fn active_leaves(&self) -> &BTreeSet<CategoryCode> {
        &self.active_leaves
    }

    pub fn active_nodes(&self) -> impl Iterator<Item = &TaxonomyNode> {
        self.active_leaves.iter().map(|c| &self.nodes[c])
    }

    /// Ancestors from the level-1 node down to the parent of `code`.
    pub fn ancestors(&self, code: &CategoryCode) -> Result<Vec<&TaxonomyNode>, TaxonomyError> {
        self.node(code)?;
        (1..code.level())
            .map(|k| self.node(&code.prefix(k).expect("k below level")))
            .collect()
    }

    /// Copy of the taxonomy whose active leaves are exactly `observed`.
    pub fn restrict_active(
        &self,
        observed: &BTreeSet<CategoryCode>,
    ) -> Result<Taxonomy, TaxonomyError> {
        for c in observed {
            self.node(c)?;
            if !c.is_leaf() {
                return Err(TaxonomyError::NotALeaf(c.clone()));
            }
        }
        Ok(Taxonomy {
            nodes: self.nodes.clone(),
            active_leaves: observed.clone(),
        })
    }

    /// Active leaves whose code starts with `query` or whose label contains
    /// it (case-insensitively). An empty query matches every active leaf.
    pub fn search_leaves(&self, query: &str) -> Vec<&TaxonomyNode> {
        let q = query.trim().to_lowercase();
        self.active_nodes()
            .filter(|n| {
                q.is_empty()
                    || n.code.to_string().starts_with(&q)
                    || n.label.to_lowercase().contains(&q)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(s: &str) -> CategoryCode {
        s.parse().unwrap()
    }

    fn tax(rows: &[(&str, &str, &str)]) -> Result<Taxonomy, TaxonomyError> {
        Taxonomy::from_rows(rows.iter().copied(), &Preprocessor::default())
    }

    const SOFTWARE: &[(&str, &str, &str)] = &[
        ("2", "Professional and technical personnel", ""),
        ("2-02", "Engineering and technical personnel", ""),
        ("2-02-10", "Electronic and information engineers", ""),
        ("2-02-10-03", "Software engineer", "design develop and test software"),
    ];

    #[test]
    fn code_render_parse() {
        let c = code("2-02-10-03");
        assert_eq!(c.segments(), [2, 2, 10, 3]);
        assert_eq!(c.to_string(), "2-02-10-03");
        assert_eq!(code("4-4-5-1").to_string(), "4-04-05-01");
        assert_eq!(code("2").level(), 1);
        for bad in ["", "2--3", "a-01", "1-2-3-4-5", "-1", "1-x"] {
            assert!(bad.parse::<CategoryCode>().is_err(), "{bad}");
        }
    }

    #[test]
    fn code_serde_uses_canonical_text() {
        let c = code("4-04-05-01");
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, "\"4-04-05-01\"");
        assert_eq!(serde_json::from_str::<CategoryCode>(&json).unwrap(), c);
    }

    #[test]
    fn load_four_level_chain() {
        let t = tax(SOFTWARE).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.leaves().count(), 1);
        assert_eq!(t.active_leaves().len(), 1);
        let leaf = t.get(&code("2-02-10-03")).unwrap();
        assert_eq!(leaf.label, "Software engineer");
        assert!(leaf.description_tokens.contains(&"software".to_string()));
    }

    #[test]
    fn empty_taxonomy() {
        let t = tax(&[]).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.leaves().count(), 0);
    }

    #[test]
    fn missing_parent_names_code() {
        let err = tax(&[("2", "a", ""), ("2-02", "b", ""), ("2-02-10-03", "c", "d")]).unwrap_err();
        match err {
            TaxonomyError::MissingParent { line, code: c, parent } => {
                assert_eq!(line, 3);
                assert_eq!(c, code("2-02-10-03"));
                assert_eq!(parent, code("2-02-10"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_and_malformed_rejected() {
        assert!(matches!(
            tax(&[("2", "a", ""), ("2", "b", "")]),
            Err(TaxonomyError::DuplicateCode { line: 2, .. })
        ));
        assert!(matches!(
            tax(&[("2", "a", ""), ("2-x", "b", "")]),
            Err(TaxonomyError::MalformedLine { line: 2, .. })
        ));
    }

    #[test]
    fn parent_may_follow_child_in_file() {
        let mut rows = SOFTWARE.to_vec();
        rows.reverse();
        assert_eq!(tax(&rows).unwrap().len(), 4);
    }

    #[test]
    fn ancestors_follow_prefixes() {
        let t = tax(&[
            ("2", "a", ""),
            ("2-02", "b", ""),
            ("2-02-10", "c", ""),
            ("2-02-10-03", "d", "software"),
            ("4", "e", ""),
            ("4-04", "f", ""),
            ("4-04-05", "g", ""),
            ("4-04-05-01", "h", "chef"),
        ])
        .unwrap();
        let codes = |c: &str| {
            t.ancestors(&code(c))
                .unwrap()
                .iter()
                .map(|n| n.code.to_string())
                .collect::<Vec<_>>()
        };
        assert_eq!(codes("2-02-10-03"), ["2", "2-02", "2-02-10"]);
        assert_eq!(codes("4-04-05-01"), ["4", "4-04", "4-04-05"]);
        assert!(codes("2").is_empty());
        assert!(matches!(
            t.ancestors(&code("9")),
            Err(TaxonomyError::UnknownCode(_))
        ));
    }

    #[test]
    fn restrict_active_checks_leaves() {
        let t = tax(SOFTWARE).unwrap();
        let all = t.active_leaves().clone();
        assert_eq!(t.restrict_active(&all).unwrap().active_leaves(), &all);
        let none = t.restrict_active(&BTreeSet::new()).unwrap();
        assert!(none.active_leaves().is_empty());
        assert_eq!(none.len(), t.len());
        assert!(matches!(
            t.restrict_active(&[code("2-02")].into()),
            Err(TaxonomyError::NotALeaf(_))
        ));
        assert!(matches!(
            t.restrict_active(&[code("3-01-01-01")].into()),
            Err(TaxonomyError::UnknownCode(_))
        ));
    }

    #[test]
    fn search_by_prefix_or_label() {
        let t = tax(SOFTWARE).unwrap();
        assert_eq!(t.search_leaves("2-02").len(), 1);
        assert_eq!(t.search_leaves("software").len(), 1);
        assert!(t.search_leaves("chef").is_empty());
    }
}
