//! Headless judge speaking the review API.

use std::collections::BTreeMap;
use std::time::Duration;

use jobcorpus::pipeline::{Decision, Progress};
use jobcorpus::taxonomy::CategoryCode;
use reqwest::StatusCode;
use serde::de::DeserializeOwned;

use crate::wire::{AuditView, ChoiceRequest, ChoiceStatus, ErrorBody, LeafView, TaskView, VoteRequest, VoteStatus};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),
    #[error("server answered {status}: {message}")]
    Api { status: StatusCode, message: String },
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            Self::Api { status, .. } => Some(*status),
            Self::Http(e) => e.status(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct JudgeClient {
    base: String,
    judge: String,
    http: reqwest::Client,
}

async fn decode<T: DeserializeOwned>(resp: reqwest::Response) -> Result<T, ClientError> {
    let status = resp.status();
    if status.is_success() {
        return Ok(resp.json().await?);
    }
    let text = resp.text().await.unwrap_or_default();
    let message = serde_json::from_str::<ErrorBody>(&text).map(|b| b.error).unwrap_or(text);
    Err(ClientError::Api { status, message })
}

async fn decode_optional<T: DeserializeOwned>(resp: reqwest::Response) -> Result<Option<T>, ClientError> {
    if resp.status() == StatusCode::NO_CONTENT {
        return Ok(None);
    }
    decode(resp).await.map(Some)
}

impl JudgeClient {
    pub fn new(base: impl Into<String>, judge: impl Into<String>) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_string(),
            judge: judge.into(),
            http: reqwest::Client::new(),
        }
    }

    pub fn judge(&self) -> &str {
        &self.judge
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub async fn next_task(&self) -> Result<Option<TaskView>, ClientError> {
        let resp = self
            .http
            .get(self.url("/api/tasks/next"))
            .query(&[("judge", &self.judge)])
            .send()
            .await?;
        decode_optional(resp).await
    }

    pub async fn vote(&self, task_id: u64, decision: Decision) -> Result<VoteStatus, ClientError> {
        let body = VoteRequest {
            judge: self.judge.clone(),
            decision,
        };
        let resp = self.http.post(self.url(&format!("/api/tasks/{task_id}/vote"))).json(&body).send().await?;
        decode(resp).await
    }

    pub async fn progress(&self) -> Result<Progress, ClientError> {
        decode(self.http.get(self.url("/api/progress")).send().await?).await
    }

    pub async fn next_audit(&self) -> Result<Option<AuditView>, ClientError> {
        let resp = self
            .http
            .get(self.url("/api/audit/next"))
            .query(&[("judge", &self.judge)])
            .send()
            .await?;
        decode_optional(resp).await
    }

    pub async fn choose(&self, audit_id: u64, code: CategoryCode) -> Result<ChoiceStatus, ClientError> {
        let body = ChoiceRequest {
            judge: self.judge.clone(),
            code,
        };
        let resp = self.http.post(self.url(&format!("/api/audit/{audit_id}/choice"))).json(&body).send().await?;
        decode(resp).await
    }

    pub async fn leaves(&self, query: &str) -> Result<Vec<LeafView>, ClientError> {
        let resp = self.http.get(self.url("/api/taxonomy/leaves")).query(&[("q", query)]).send().await?;
        decode(resp).await
    }
}

/// How a headless judge answers.
#[derive(Debug, Clone)]
pub enum JudgePolicy {
    /// Accept exactly the candidates matching a reference labeling, and pick
    /// the reference leaf in audits.
    Truth(BTreeMap<String, CategoryCode>),
    AcceptAll,
    RejectAll,
}

impl JudgePolicy {
    pub fn decide(&self, view: &TaskView) -> Decision {
        let yes = match self {
            Self::Truth(t) => t.get(&view.doc_id) == Some(&view.candidate.code),
            Self::AcceptAll => true,
            Self::RejectAll => false,
        };
        if yes {
            Decision::Yes
        } else {
            Decision::No
        }
    }

    /// Audit pick. Without a reference the first listed leaf is chosen.
    pub fn pick(&self, view: &AuditView, leaves: &[LeafView]) -> Option<CategoryCode> {
        match self {
            Self::Truth(t) => t.get(&view.doc_id).cloned(),
            _ => leaves.first().map(|l| l.code.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct JudgeSummary {
    pub votes: usize,
    /// Votes refused because the task was decided meanwhile.
    pub conflicts: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct JudgeRun {
    /// Stop after this many submissions.
    pub max: Option<usize>,
    /// Keep polling while the queue is empty but the run has not stopped.
    pub poll: Option<Duration>,
    pub audit: bool,
}

fn done(p: &Progress) -> bool {
    p.finalized || (p.open == 0 && p.stop_reason.is_some())
}

/// Works through the queue until it is empty (or, with polling, until the
/// pipeline stops).
pub async fn run_judge(client: &JudgeClient, policy: &JudgePolicy, run: JudgeRun) -> Result<JudgeSummary, ClientError> {
    let mut summary = JudgeSummary::default();
    let leaves = if run.audit { client.leaves("").await? } else { Vec::new() };
    loop {
        if run.max.is_some_and(|m| summary.votes + summary.conflicts >= m) {
            return Ok(summary);
        }
        let result = if run.audit {
            match client.next_audit().await? {
                Some(view) => match policy.pick(&view, &leaves) {
                    Some(code) => Some(client.choose(view.audit_id, code).await.map(|_| ())),
                    None => {
                        log::warn!("no pick for audit task {}", view.audit_id);
                        return Ok(summary);
                    }
                },
                None => None,
            }
        } else {
            match client.next_task().await? {
                Some(view) => Some(client.vote(view.task_id, policy.decide(&view)).await.map(|_| ())),
                None => None,
            }
        };
        match result {
            Some(Ok(())) => summary.votes += 1,
            Some(Err(e)) if e.status() == Some(StatusCode::CONFLICT) => summary.conflicts += 1,
            Some(Err(e)) => return Err(e),
            None => match run.poll {
                // Audit boards never grow, so only review mode waits.
                Some(wait) if !run.audit && !done(&client.progress().await?) => tokio::time::sleep(wait).await,
                _ => return Ok(summary),
            },
        }
    }
}
