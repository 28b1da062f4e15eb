//! The two-module construction loop: WE-cos candidates confirmed by a judge
//! quorum seed the corpus, then classifier predictions over the remainder go
//! through the same review until the stop rule fires.
//!
//! Every mutation of a [`Session`] is an [`Event`]; the append-only log plus
//! an optional [`Snapshot`] reconstructs the session exactly.

mod audit;
mod events;
mod session;
mod state;
mod stats;

pub use audit::{audit_run, majority_code, AuditBoard, AuditOutcome, AuditReport, AuditTask};
pub use events::{read_events, Event, EventLog, EventRecord, Snapshot};
pub use session::{drive_with_oracle, ExportRecord, FinalReport, Progress, Session, VoteOutcome};
pub use state::{LedgerRow, PipelineState, StopReason};
pub use stats::{corpus_stats, CorpusStats, TopLevelRow, DEFAULT_LEAF_THRESHOLDS};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierConfig, ClassifierError};
use crate::similarity::{SimilarityConfig, SimilarityError};
use crate::taxonomy::{CategoryCode, TaxonomyError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("quorum must be odd and positive, got {0}")]
    BadQuorum(usize),
    #[error("taxonomy has no active leaves")]
    NoActiveLeaves,
    #[error("nothing left to label")]
    NothingToLabel,
    #[error("module 1 has already run")]
    Module1Done,
    #[error("module 1 has not completed")]
    Module1Pending,
    #[error("stage {0} still has open tasks")]
    StageOpen(String),
    #[error("labeled set is empty")]
    NoLabels,
    #[error("the stop rule has fired: {0}")]
    Stopped(StopReason),
    #[error("the stop rule has not fired")]
    NotStopped,
    #[error("session is finalized")]
    Finalized,
    #[error("unknown task {0}")]
    UnknownTask(u64),
    #[error("judge {judge} already voted differently on task {task}")]
    ConflictingVote { task: u64, judge: String },
    #[error("task {0} is already decided")]
    TaskDecided(u64),
    #[error("document {0} is not in the unlabeled pool")]
    NotUnlabeled(String),
    #[error("unknown document {0}")]
    UnknownDocument(String),
    #[error("duplicate document id {0}")]
    DuplicateDocument(String),
    #[error("state inconsistency: {0}")]
    Inconsistent(String),
    #[error("sample size {n} exceeds corpus size {size}")]
    SampleTooLarge { n: usize, size: usize },
    #[error("no audit is open")]
    NoAudit,
    #[error("unknown audit task {0}")]
    UnknownAuditTask(u64),
    #[error("{0} is not an active leaf")]
    NotActiveLeaf(CategoryCode),
    #[error("replay diverged at event {seq}: {reason}")]
    Replay { seq: u64, reason: String },
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Io(#[from] crate::io::RecordError),
}

/// Which stage proposed a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    Wecos,
    /// Classifier iteration, counted from 1.
    Svm(u32),
}

impl Origin {
    /// Stage index: 0 for WE-cos, `k` for classifier iteration `k`.
    pub fn index(self) -> u32 {
        match self {
            Self::Wecos => 0,
            Self::Svm(k) => k,
        }
    }

    /// Row label in the construction ledger.
    pub fn ledger_label(self) -> String {
        match self {
            Self::Wecos => "WE-cos".to_string(),
            Self::Svm(k) => {
                let suffix = match (k % 10, k % 100) {
                    (_, 11..=13) => "th",
                    (1, _) => "st",
                    (2, _) => "nd",
                    (3, _) => "rd",
                    _ => "th",
                };
                format!("SVM-{k}{suffix}")
            }
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Wecos => f.write_str("wecos"),
            Self::Svm(k) => write!(f, "svm-{k}"),
        }
    }
}

impl FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "wecos" {
            return Ok(Self::Wecos);
        }
        s.strip_prefix("svm-")
            .and_then(|k| k.parse().ok())
            .filter(|&k| k > 0)
            .map(Self::Svm)
            .ok_or_else(|| format!("unknown origin `{s}`"))
    }
}

impl Serialize for Origin {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Origin {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Yes,
    No,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictDecision {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub decision: VerdictDecision,
    pub yes_votes: usize,
    pub no_votes: usize,
}

impl Verdict {
    /// Strict-majority verdict over a complete set of votes.
    pub fn tally<'a>(votes: impl IntoIterator<Item = &'a Decision>) -> Self {
        let (mut yes_votes, mut no_votes) = (0, 0);
        for v in votes {
            match v {
                Decision::Yes => yes_votes += 1,
                Decision::No => no_votes += 1,
            }
        }
        let decision = if yes_votes > no_votes {
            VerdictDecision::Accepted
        } else {
            VerdictDecision::Rejected
        };
        Self {
            decision,
            yes_votes,
            no_votes,
        }
    }

    pub fn accepted(&self) -> bool {
        self.decision == VerdictDecision::Accepted
    }
}

pub fn validate_quorum(quorum: usize) -> Result<(), PipelineError> {
    if quorum % 2 == 1 {
        Ok(())
    } else {
        Err(PipelineError::BadQuorum(quorum))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Open,
    Decided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewTask {
    pub task_id: u64,
    pub doc_id: String,
    pub candidate: CategoryCode,
    pub score: f64,
    pub origin: Origin,
    pub votes: Vec<(String, Decision)>,
    pub status: TaskStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

impl ReviewTask {
    pub fn new(task_id: u64, doc_id: String, candidate: CategoryCode, score: f64, origin: Origin) -> Self {
        Self {
            task_id,
            doc_id,
            candidate,
            score,
            origin,
            votes: Vec::new(),
            status: TaskStatus::Open,
            verdict: None,
        }
    }

    pub fn vote_of(&self, judge: &str) -> Option<Decision> {
        self.votes.iter().find(|v| v.0 == judge).map(|v| v.1)
    }

    pub fn is_open(&self) -> bool {
        self.status == TaskStatus::Open
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub doc_id: String,
    pub code: CategoryCode,
    pub origin: Origin,
    /// Stage index at which the label was accepted.
    pub decided_at: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub quorum: usize,
    /// Stop once the unlabeled pool is below this fraction of the input.
    pub stop_fraction: f64,
    pub similarity: SimilarityConfig,
    pub classifier: ClassifierConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            quorum: 5,
            stop_fraction: 0.05,
            similarity: SimilarityConfig::default(),
            classifier: ClassifierConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        validate_quorum(self.quorum)?;
        self.similarity.validate()?;
        Ok(())
    }
}
