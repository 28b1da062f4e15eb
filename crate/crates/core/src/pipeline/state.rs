use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CorpusEntry, Origin, PipelineError};
use crate::taxonomy::CategoryCode;

/// One row of the construction ledger: how many documents a stage saw, how
/// many it labeled, and how many remained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub stage: Origin,
    pub input: usize,
    pub labeled: usize,
    pub remaining: usize,
    /// Predictions skipped because the same label was already rejected.
    #[serde(default)]
    pub auto_rejected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StopReason {
    BelowThreshold {
        remaining: usize,
        input_total: usize,
        fraction: f64,
    },
    NoExpansion {
        stage: Origin,
    },
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BelowThreshold {
                remaining,
                input_total,
                fraction,
            } => {
                let pct = if *input_total == 0 {
                    0.0
                } else {
                    100.0 * *remaining as f64 / *input_total as f64
                };
                write!(
                    f,
                    "remainder below threshold: {remaining} of {input_total} ({pct:.2}% < {:.2}%)",
                    100.0 * fraction
                )
            }
            Self::NoExpansion { stage } => write!(f, "no expansion: {} added no labels", stage.ledger_label()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineState {
    pub labeled: BTreeMap<String, CorpusEntry>,
    pub unlabeled: BTreeSet<String>,
    /// Discarded ids with the reason recorded at finalization.
    pub discarded: BTreeMap<String, String>,
    /// Number of completed stages.
    pub iteration: u32,
    pub input_total: usize,
    pub ledger: Vec<LedgerRow>,
    /// Labels the judges have turned down, per document.
    pub rejected: BTreeSet<(String, CategoryCode)>,
    /// Leaves that received data in module 1; empty before it completes.
    pub active_leaves: BTreeSet<CategoryCode>,
}

impl PipelineState {
    pub fn new<I: IntoIterator<Item = String>>(ids: I) -> Self {
        let unlabeled: BTreeSet<String> = ids.into_iter().collect();
        Self {
            input_total: unlabeled.len(),
            unlabeled,
            ..Self::default()
        }
    }

    pub fn fraction_unlabeled(&self) -> f64 {
        if self.input_total == 0 {
            0.0
        } else {
            self.unlabeled.len() as f64 / self.input_total as f64
        }
    }

    /// Stop when the remainder is below `fraction` of the input, or when the
    /// last completed stage labeled nothing.
    pub fn should_stop(&self, fraction: f64) -> Option<StopReason> {
        if (self.unlabeled.len() as f64) < fraction * self.input_total as f64 {
            return Some(StopReason::BelowThreshold {
                remaining: self.unlabeled.len(),
                input_total: self.input_total,
                fraction,
            });
        }
        match self.ledger.last() {
            Some(row) if row.labeled == 0 => Some(StopReason::NoExpansion { stage: row.stage }),
            _ => None,
        }
    }

    /// Cheap check run after every transition.
    pub(crate) fn check_counts(&self) -> Result<(), PipelineError> {
        let total = self.labeled.len() + self.unlabeled.len() + self.discarded.len();
        if total == self.input_total {
            Ok(())
        } else {
            Err(PipelineError::Inconsistent(format!(
                "{} labeled + {} unlabeled + {} discarded != {} ingested",
                self.labeled.len(),
                self.unlabeled.len(),
                self.discarded.len(),
                self.input_total
            )))
        }
    }

    /// Full check: the three sets are pairwise disjoint and cover `ids`.
    pub fn verify_partition<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<(), PipelineError> {
        let mut seen = 0usize;
        for id in ids {
            seen += 1;
            let hits = usize::from(self.labeled.contains_key(id))
                + usize::from(self.unlabeled.contains(id))
                + usize::from(self.discarded.contains_key(id));
            if hits != 1 {
                return Err(PipelineError::Inconsistent(format!("{id} appears in {hits} sets")));
            }
        }
        if seen != self.input_total {
            return Err(PipelineError::Inconsistent(format!(
                "{seen} ingested ids but input total {}",
                self.input_total
            )));
        }
        self.check_counts()
    }

    /// The construction ledger in its three-column table layout.
    pub fn ledger_table(&self) -> String {
        let mut out = format!(
            "{:<10}{:>20}{:>26}{:>12}\n",
            "", "Unclassified Data", "Correct Classified Data", "Remainder"
        );
        for row in &self.ledger {
            out.push_str(&format!(
                "{:<10}{:>20}{:>26}{:>12}\n",
                row.stage.ledger_label(),
                row.input,
                row.labeled,
                row.remaining
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(total: usize, unlabeled: usize, last_added: Option<usize>) -> PipelineState {
        let mut s = PipelineState::new((0..total).map(|i| format!("d{i:03}")));
        let moved: Vec<String> = s.unlabeled.iter().take(total - unlabeled).cloned().collect();
        for id in moved {
            s.unlabeled.remove(&id);
            s.labeled.insert(
                id.clone(),
                CorpusEntry {
                    doc_id: id,
                    code: "1-01-01-01".parse().unwrap(),
                    origin: Origin::Wecos,
                    decided_at: 0,
                },
            );
        }
        if let Some(added) = last_added {
            s.ledger.push(LedgerRow {
                stage: Origin::Svm(1),
                input: unlabeled + added,
                labeled: added,
                remaining: unlabeled,
                auto_rejected: 0,
            });
        }
        s
    }

    #[test]
    fn stop_rule_cases() {
        assert!(matches!(
            state(100, 4, Some(10)).should_stop(0.05),
            Some(StopReason::BelowThreshold { remaining: 4, .. })
        ));
        assert!(state(100, 5, Some(10)).should_stop(0.05).is_none());
        assert!(matches!(
            state(100, 6, Some(0)).should_stop(0.05),
            Some(StopReason::NoExpansion { stage: Origin::Svm(1) })
        ));
        assert!(state(100, 6, Some(10)).should_stop(0.05).is_none());
        assert!(state(100, 100, None).should_stop(0.05).is_none());
    }

    #[test]
    fn paper_scale_remainder_stops() {
        let mut s = PipelineState::default();
        s.input_total = 107_328;
        s.unlabeled = (0..4747).map(|i| i.to_string()).collect();
        let r = s.should_stop(0.05).unwrap();
        assert!(r.to_string().contains("4.42%"));
    }

    #[test]
    fn partition_detects_overlap() {
        let mut s = state(10, 5, None);
        let ids: Vec<String> = (0..10).map(|i| format!("d{i:03}")).collect();
        s.verify_partition(ids.iter().map(String::as_str)).unwrap();
        s.unlabeled.insert("d000".into());
        assert!(s.verify_partition(ids.iter().map(String::as_str)).is_err());
    }

    #[test]
    fn ledger_layout() {
        let mut s = PipelineState::default();
        s.ledger = vec![
            LedgerRow { stage: Origin::Wecos, input: 107_328, labeled: 35_127, remaining: 72_201, auto_rejected: 0 },
            LedgerRow { stage: Origin::Svm(1), input: 72_201, labeled: 64_206, remaining: 7_995, auto_rejected: 0 },
            LedgerRow { stage: Origin::Svm(2), input: 7_995, labeled: 3_248, remaining: 4_747, auto_rejected: 0 },
        ];
        let t = s.ledger_table();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].contains("Unclassified Data") && lines[0].contains("Remainder"));
        assert!(lines[2].starts_with("SVM-1st") && lines[2].ends_with("7995"));
    }
}
