//! Request and response bodies of the review API, all JSON.

use jobcorpus::pipeline::{AuditOutcome, Decision, Origin, TaskStatus, VerdictDecision};
use jobcorpus::taxonomy::{CategoryCode, TaxonomyNode};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateView {
    pub code: CategoryCode,
    pub label: String,
    pub description: String,
}

/// A review task as shown to one judge. Other judges' votes are reduced to
/// a count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskView {
    pub task_id: u64,
    pub doc_id: String,
    pub title: String,
    pub description: String,
    pub candidate: CandidateView,
    pub origin: Origin,
    pub score: f64,
    pub votes_so_far: usize,
    pub quorum: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRequest {
    pub judge: String,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteStatus {
    pub task_id: u64,
    pub status: TaskStatus,
    pub votes: usize,
    /// Present once the task is decided.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictDecision>,
    /// The same vote had already been stored.
    pub duplicate: bool,
}

/// An audit task: the judge picks a leaf instead of answering yes or no.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditView {
    pub audit_id: u64,
    pub doc_id: String,
    pub title: String,
    pub description: String,
    pub choices_so_far: usize,
    pub quorum: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceRequest {
    pub judge: String,
    pub code: CategoryCode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceStatus {
    pub audit_id: u64,
    pub choices: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<AuditOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafView {
    pub code: CategoryCode,
    pub label: String,
    pub description: String,
}

impl From<&TaxonomyNode> for LeafView {
    fn from(n: &TaxonomyNode) -> Self {
        Self {
            code: n.code.clone(),
            label: n.label.clone(),
            description: n.description.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
