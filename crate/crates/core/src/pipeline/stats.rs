use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CorpusEntry, PipelineError};
use crate::taxonomy::{CategoryCode, Taxonomy};

pub const DEFAULT_LEAF_THRESHOLDS: [usize; 2] = [500, 1000];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopLevelRow {
    pub code: CategoryCode,
    pub label: String,
    pub count: usize,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: usize,
    pub rows: Vec<TopLevelRow>,
    pub leaf_counts: BTreeMap<CategoryCode, usize>,
    /// `(threshold, number of leaves with at least that many entries)`.
    pub histogram: Vec<(usize, usize)>,
}

/// Entry counts rolled up to every top-level category of the taxonomy, plus
/// per-leaf counts.
pub fn corpus_stats(entries: &[CorpusEntry], taxonomy: &Taxonomy, thresholds: &[usize]) -> Result<CorpusStats, PipelineError> {
    let mut leaf_counts: BTreeMap<CategoryCode, usize> = BTreeMap::new();
    for e in entries {
        taxonomy.ancestors(&e.code)?;
        *leaf_counts.entry(e.code.clone()).or_default() += 1;
    }
    let mut top: BTreeMap<CategoryCode, usize> = taxonomy
        .nodes()
        .filter(|n| n.code.level() == 1)
        .map(|n| (n.code.clone(), 0))
        .collect();
    for (code, n) in &leaf_counts {
        *top.entry(code.top_level()).or_default() += n;
    }
    let total = entries.len();
    let rows = top
        .into_iter()
        .map(|(code, count)| TopLevelRow {
            label: taxonomy.get(&code).map(|n| n.label.clone()).unwrap_or_default(),
            proportion: if total == 0 { 0.0 } else { count as f64 / total as f64 },
            code,
            count,
        })
        .collect();
    let histogram = thresholds
        .iter()
        .map(|&t| (t, leaf_counts.values().filter(|&&n| n >= t).count()))
        .collect();
    Ok(CorpusStats {
        total,
        rows,
        leaf_counts,
        histogram,
    })
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.rows.iter().map(|r| r.label.chars().count()).max().unwrap_or(0).max(18) + 2;
        writeln!(
            f,
            "{:<7}{:<width$}{:>18}{:>12}",
            "Codes", "Top-level category", "Number of samples", "Proportion"
        )?;
        for r in &self.rows {
            let pct = format!("{:.2}%", 100.0 * r.proportion);
            writeln!(f, "{:<7}{:<width$}{:>18}{:>12}", r.code.to_string(), r.label, r.count, pct)?;
        }
        writeln!(f, "{} samples in {} leaf categories", self.total, self.leaf_counts.len())?;
        for (t, n) in &self.histogram {
            writeln!(f, "leaf categories with at least {t} samples: {n}")?;
        }
        let max = self.leaf_counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)));
        let min = self.leaf_counts.iter().min_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0)));
        if let (Some(max), Some(min)) = (max, min) {
            writeln!(f, "largest leaf {} ({}), smallest leaf {} ({})", max.0, max.1, min.0, min.1)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Origin;
    use crate::text_prep::Preprocessor;

    fn taxonomy() -> Taxonomy {
        let rows = [
            ("1", "Managers", ""),
            ("1-01", "Public", ""),
            ("1-01-01", "Office", ""),
            ("1-01-01-01", "Director", "runs things"),
            ("2", "Professionals", ""),
            ("2-01", "Engineering", ""),
            ("2-01-01", "Software", ""),
            ("2-01-01-01", "Developer", "writes code"),
            ("2-01-01-02", "Tester", "tests code"),
            ("3", "Clerks", ""),
        ];
        Taxonomy::from_rows(rows, &Preprocessor::default()).unwrap()
    }

    fn entry(code: &str) -> CorpusEntry {
        CorpusEntry {
            doc_id: String::new(),
            code: code.parse().unwrap(),
            origin: Origin::Wecos,
            decided_at: 0,
        }
    }

    #[test]
    fn rollup_and_histogram() {
        let entries: Vec<_> = ["2-01-01-01", "2-01-01-01", "2-01-01-02", "1-01-01-01"].map(entry).into();
        let s = corpus_stats(&entries, &taxonomy(), &[1, 2]).unwrap();
        let counts: Vec<usize> = s.rows.iter().map(|r| r.count).collect();
        assert_eq!(counts, vec![1, 3, 0]);
        assert_eq!(s.histogram, vec![(1, 3), (2, 1)]);
        let text = s.to_string();
        assert!(text.contains("Top-level category") && text.contains("75.00%"));
    }

    #[test]
    fn single_top_level_is_everything() {
        let s = corpus_stats(&[entry("2-01-01-02")], &taxonomy(), &DEFAULT_LEAF_THRESHOLDS).unwrap();
        assert_eq!(s.rows[1].proportion, 1.0);
    }

    #[test]
    fn unknown_code_is_named() {
        let err = corpus_stats(&[entry("4-01-01-01")], &taxonomy(), &[]).unwrap_err();
        assert!(err.to_string().contains("4-01-01-01"));
    }
}
