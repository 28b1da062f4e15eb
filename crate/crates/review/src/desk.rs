//! Task routing between judges and one pipeline session.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Mutex, MutexGuard, RwLock, RwLockReadGuard, RwLockWriteGuard};
use std::time::{Duration, Instant};

use jobcorpus::pipeline::{PipelineError, Progress, Session, Snapshot, TaskStatus, VoteOutcome};
use jobcorpus::taxonomy::CategoryCode;

use crate::wire::{AuditView, CandidateView, ChoiceStatus, LeafView, TaskView, VoteStatus};

pub const DEFAULT_REISSUE_AFTER: Duration = Duration::from_secs(15 * 60);

#[derive(Debug, thiserror::Error)]
pub enum DeskError {
    #[error("unknown judge `{0}`")]
    UnknownJudge(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone)]
pub struct DeskConfig {
    /// How long a handed-out task stays reserved for its judge.
    pub reissue_after: Duration,
    /// Open the next module-2 stage as soon as one closes.
    pub auto_advance: bool,
}

impl Default for DeskConfig {
    fn default() -> Self {
        Self {
            reissue_after: DEFAULT_REISSUE_AFTER,
            auto_advance: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Assignment {
    task_id: u64,
    since: Instant,
}

/// Shared front end of a [`Session`] for many concurrent judges.
///
/// Reads take a shared lock; votes are serialized through the session's
/// single writer, which logs each event before applying it.
pub struct ReviewDesk {
    session: RwLock<Session>,
    judges: RwLock<BTreeSet<String>>,
    assignments: Mutex<HashMap<String, Assignment>>,
    advancing: Mutex<()>,
    config: DeskConfig,
}

fn poisoned<T>(e: std::sync::PoisonError<T>) -> T {
    // A panicking handler must not wedge every later request.
    e.into_inner()
}

impl ReviewDesk {
    pub fn new<I, S>(session: Session, judges: I, config: DeskConfig) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            session: RwLock::new(session),
            judges: RwLock::new(judges.into_iter().map(Into::into).collect()),
            assignments: Mutex::new(HashMap::new()),
            advancing: Mutex::new(()),
            config,
        }
    }

    pub fn register_judge(&self, token: impl Into<String>) {
        self.judges.write().unwrap_or_else(poisoned).insert(token.into());
    }

    pub fn config(&self) -> &DeskConfig {
        &self.config
    }

    pub fn read(&self) -> RwLockReadGuard<'_, Session> {
        self.session.read().unwrap_or_else(poisoned)
    }

    fn write(&self) -> RwLockWriteGuard<'_, Session> {
        self.session.write().unwrap_or_else(poisoned)
    }

    fn assignments(&self) -> MutexGuard<'_, HashMap<String, Assignment>> {
        self.assignments.lock().unwrap_or_else(poisoned)
    }

    pub fn into_session(self) -> Session {
        self.session.into_inner().unwrap_or_else(poisoned)
    }

    pub fn snapshot(&self) -> Snapshot {
        self.read().snapshot()
    }

    fn check_judge(&self, judge: &str) -> Result<(), DeskError> {
        if self.judges.read().unwrap_or_else(poisoned).contains(judge) {
            Ok(())
        } else {
            Err(DeskError::UnknownJudge(judge.to_string()))
        }
    }

    pub fn next_task(&self, judge: &str) -> Result<Option<TaskView>, DeskError> {
        self.next_task_at(judge, Instant::now())
    }

    /// Hands `judge` an open task it has not voted on. A judge asking again
    /// before voting gets the same task until the reservation times out.
    /// Tasks already reserved by enough other judges to reach the quorum are
    /// skipped while anything else is available.
    pub fn next_task_at(&self, judge: &str, now: Instant) -> Result<Option<TaskView>, DeskError> {
        self.check_judge(judge)?;
        let session = self.read();
        let mut asg = self.assignments();
        let live = |a: &Assignment| now.saturating_duration_since(a.since) < self.config.reissue_after;
        if let Some(a) = asg.get(judge) {
            let task = session.task(a.task_id);
            if live(a) && task.is_some_and(|t| t.is_open() && t.vote_of(judge).is_none()) {
                return Ok(Some(view(&session, a.task_id)));
            }
        }
        let mut claims: HashMap<u64, usize> = HashMap::new();
        for (j, a) in asg.iter() {
            if j != judge && live(a) {
                *claims.entry(a.task_id).or_default() += 1;
            }
        }
        let quorum = session.config().quorum;
        let mut fallback = None;
        let mut chosen = None;
        for id in session.open_tasks() {
            let task = session.task(id).expect("open task exists");
            if task.vote_of(judge).is_some() {
                continue;
            }
            if task.votes.len() + claims.get(&id).copied().unwrap_or(0) < quorum {
                chosen = Some(id);
                break;
            }
            fallback.get_or_insert(id);
        }
        let Some(id) = chosen.or(fallback) else {
            asg.remove(judge);
            return Ok(None);
        };
        asg.insert(judge.to_string(), Assignment { task_id: id, since: now });
        Ok(Some(view(&session, id)))
    }

    pub fn record_vote(&self, task_id: u64, judge: &str, decision: jobcorpus::pipeline::Decision) -> Result<VoteStatus, DeskError> {
        self.check_judge(judge)?;
        let status = {
            let mut session = self.write();
            let outcome = session.record_vote(task_id, judge, decision)?;
            let task = session.task(task_id).expect("voted task exists");
            let verdict = task.verdict.map(|v| v.decision);
            match outcome {
                VoteOutcome::Recorded { votes, .. } => VoteStatus {
                    task_id,
                    status: task.status,
                    votes,
                    verdict,
                    duplicate: false,
                },
                VoteOutcome::Duplicate { votes, status } => VoteStatus {
                    task_id,
                    status,
                    votes,
                    verdict,
                    duplicate: true,
                },
            }
        };
        let mut asg = self.assignments();
        if asg.get(judge).is_some_and(|a| a.task_id == task_id) {
            asg.remove(judge);
        }
        if status.status == TaskStatus::Decided {
            asg.retain(|_, a| a.task_id != task_id);
        }
        Ok(status)
    }

    /// True when a stage has closed and the stop rule has not fired.
    pub fn ready_to_advance(&self) -> bool {
        let s = self.read();
        ready(&s)
    }

    /// Trains on the current corpus and opens the next module-2 stage.
    /// Training holds only the shared lock. Returns the number of new tasks,
    /// or `None` when there was nothing to do.
    pub fn advance(&self) -> Result<Option<usize>, DeskError> {
        let Ok(_guard) = self.advancing.try_lock() else {
            return Ok(None);
        };
        let model = {
            let s = self.read();
            if !ready(&s) {
                return Ok(None);
            }
            s.train_current()?
        };
        let mut s = self.write();
        if !ready(&s) {
            return Ok(None);
        }
        let ids = s.module2_iterate_with(&model)?;
        log::info!("opened stage {} with {} tasks", s.state().iteration, ids.len());
        Ok(Some(ids.len()))
    }

    pub fn progress(&self) -> Progress {
        self.read().progress()
    }

    pub fn next_audit(&self, judge: &str) -> Result<Option<AuditView>, DeskError> {
        self.check_judge(judge)?;
        let s = self.read();
        let Some(board) = s.audit() else {
            return Ok(None);
        };
        Ok(board.next_for(judge).map(|t| {
            let d = s.document(&t.doc_id).expect("audited document exists");
            AuditView {
                audit_id: t.audit_id,
                doc_id: t.doc_id.clone(),
                title: d.title.clone(),
                description: d.body.clone(),
                choices_so_far: t.choices.len(),
                quorum: board.quorum,
            }
        }))
    }

    pub fn record_choice(&self, audit_id: u64, judge: &str, code: CategoryCode) -> Result<ChoiceStatus, DeskError> {
        self.check_judge(judge)?;
        let task = self.write().record_audit_choice(audit_id, judge, code)?;
        Ok(ChoiceStatus {
            audit_id,
            choices: task.choices.len(),
            outcome: task.outcome,
        })
    }

    pub fn leaves(&self, query: &str) -> Vec<LeafView> {
        let s = self.read();
        s.taxonomy().search_leaves(query).into_iter().map(LeafView::from).collect()
    }
}

fn ready(s: &Session) -> bool {
    !s.is_finalized()
        && s.open_stage().is_none()
        && !s.state().ledger.is_empty()
        && s.should_stop().is_none()
}

fn view(s: &Session, id: u64) -> TaskView {
    let t = s.task(id).expect("task exists");
    let d = s.document(&t.doc_id).expect("task document exists");
    let node = s.taxonomy().get(&t.candidate);
    TaskView {
        task_id: t.task_id,
        doc_id: t.doc_id.clone(),
        title: d.title.clone(),
        description: d.body.clone(),
        candidate: CandidateView {
            code: t.candidate.clone(),
            label: node.map(|n| n.label.clone()).unwrap_or_default(),
            description: node.map(|n| n.description.clone()).unwrap_or_default(),
        },
        origin: t.origin,
        score: t.score,
        votes_so_far: t.votes.len(),
        quorum: s.config().quorum,
    }
}
