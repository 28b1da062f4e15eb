use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::audit::{AuditBoard, AuditTask};
use super::events::{Event, EventLog, EventRecord, Snapshot, SNAPSHOT_FORMAT};
use super::state::{LedgerRow, PipelineState, StopReason};
use super::{CorpusEntry, Decision, Origin, PipelineConfig, PipelineError, ReviewTask, TaskStatus, Verdict};
use crate::classifiers::Model;
use crate::embedding::EmbeddingTable;
use crate::io;
use crate::similarity::{fit_reference_model, weigh_categories, CategoryIndex, JudgementOracle};
use crate::taxonomy::{CategoryCode, Taxonomy};
use crate::text_prep::Document;

/// Bookkeeping for the stage whose tasks are still being reviewed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenStage {
    pub stage: Origin,
    pub input: usize,
    pub tasks: usize,
    pub created: usize,
    pub decided: usize,
    pub labeled: usize,
    pub auto_rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VoteOutcome {
    /// Vote stored; `verdict` is set when it completed the quorum.
    Recorded { votes: usize, verdict: Option<Verdict> },
    /// The judge had already cast this same vote.
    Duplicate { votes: usize, status: TaskStatus },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub open: usize,
    pub decided: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub auto_rejected: usize,
    pub iteration: u32,
    pub stage: Option<Origin>,
    pub labeled: usize,
    pub unlabeled: usize,
    pub discarded: usize,
    pub input_total: usize,
    pub percent_unlabeled: f64,
    pub stop_reason: Option<String>,
    pub finalized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalReport {
    pub reason: StopReason,
    pub labeled: usize,
    pub discarded: Vec<String>,
}

/// One line of the corpus export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub doc_id: String,
    pub title: String,
    pub description: String,
    pub code: CategoryCode,
    pub top_level: CategoryCode,
    pub origin: Origin,
    pub iteration: u32,
}

/// A corpus construction run. All mutations go through logged events.
pub struct Session {
    config: PipelineConfig,
    docs: BTreeMap<String, Document>,
    taxonomy: Taxonomy,
    state: PipelineState,
    tasks: Vec<ReviewTask>,
    open: BTreeSet<u64>,
    open_stage: Option<OpenStage>,
    finalized: bool,
    audit: Option<AuditBoard>,
    seq: u64,
    log: Option<EventLog>,
}

impl Session {
    /// Starts a session with every document unlabeled.
    pub fn new(docs: Vec<Document>, taxonomy: Taxonomy, config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let mut by_id = BTreeMap::new();
        for d in docs {
            if by_id.contains_key(&d.id) {
                return Err(PipelineError::DuplicateDocument(d.id));
            }
            by_id.insert(d.id.clone(), d);
        }
        let state = PipelineState::new(by_id.keys().cloned());
        Ok(Self {
            config,
            docs: by_id,
            taxonomy,
            state,
            tasks: Vec::new(),
            open: BTreeSet::new(),
            open_stage: None,
            finalized: false,
            audit: None,
            seq: 0,
            log: None,
        })
    }

    /// Rebuilds a session from an optional snapshot plus the events logged
    /// after it.
    pub fn restore(
        docs: Vec<Document>,
        taxonomy: Taxonomy,
        config: PipelineConfig,
        snapshot: Option<Snapshot>,
        events: &[EventRecord],
    ) -> Result<Self, PipelineError> {
        let mut s = Self::new(docs, taxonomy, config)?;
        if let Some(snap) = snapshot {
            snap.state.verify_partition(s.docs.keys().map(String::as_str))?;
            s.seq = snap.seq;
            s.state = snap.state;
            s.tasks = snap.tasks;
            s.open = s.tasks.iter().filter(|t| t.is_open()).map(|t| t.task_id).collect();
            s.open_stage = snap.open_stage;
            s.finalized = snap.finalized;
            s.audit = snap.audit;
            if !s.state.active_leaves.is_empty() {
                s.taxonomy = s.taxonomy.restrict_active(&s.state.active_leaves)?;
            }
        }
        let mut derived: Vec<Event> = Vec::new();
        let base = s.seq;
        for r in events {
            if r.seq <= base {
                continue;
            }
            if r.event.is_derived() {
                if r.seq != s.seq || !derived.contains(&r.event) {
                    return Err(PipelineError::Replay {
                        seq: r.seq,
                        reason: "logged checkpoint does not follow from the events before it".into(),
                    });
                }
                continue;
            }
            if r.seq != s.seq + 1 {
                return Err(PipelineError::Replay {
                    seq: r.seq,
                    reason: format!("expected event {}", s.seq + 1),
                });
            }
            s.validate(&r.event).map_err(|e| PipelineError::Replay {
                seq: r.seq,
                reason: e.to_string(),
            })?;
            derived = s.apply(&r.event)?;
            s.seq = r.seq;
        }
        Ok(s)
    }

    /// Appends every future event to `log`.
    pub fn attach_log(&mut self, log: EventLog) {
        self.log = Some(log);
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn state(&self) -> &PipelineState {
        &self.state
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.docs.get(id)
    }

    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.docs.values()
    }

    pub fn task(&self, id: u64) -> Option<&ReviewTask> {
        self.tasks.get(id as usize)
    }

    pub fn tasks(&self) -> &[ReviewTask] {
        &self.tasks
    }

    /// Ids of undecided tasks in creation order.
    pub fn open_tasks(&self) -> impl Iterator<Item = u64> + '_ {
        self.open.iter().copied()
    }

    pub fn open_stage(&self) -> Option<&OpenStage> {
        self.open_stage.as_ref()
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    pub fn audit(&self) -> Option<&AuditBoard> {
        self.audit.as_ref()
    }

    /// Number of events applied so far.
    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn should_stop(&self) -> Option<StopReason> {
        self.state.should_stop(self.config.stop_fraction)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            seq: self.seq,
            state: self.state.clone(),
            tasks: self.tasks.clone(),
            open_stage: self.open_stage.clone(),
            finalized: self.finalized,
            audit: self.audit.clone(),
        }
    }

    fn emit(&mut self, event: Event) -> Result<(), PipelineError> {
        self.validate(&event)?;
        let seq = self.seq + 1;
        if let Some(log) = &mut self.log {
            log.append(&EventRecord {
                seq,
                event: event.clone(),
            })?;
        }
        let derived = self.apply(&event)?;
        self.seq = seq;
        if let Some(log) = &mut self.log {
            for event in derived {
                log.append(&EventRecord { seq, event })?;
            }
        }
        Ok(())
    }

    /// Checks that `event` can be applied without mutating anything.
    fn validate(&self, event: &Event) -> Result<(), PipelineError> {
        if self.finalized && !matches!(event, Event::AuditOpened { .. } | Event::AuditChoice { .. }) {
            return Err(PipelineError::Finalized);
        }
        match event {
            Event::StageOpened { stage, auto_rejected, .. } => {
                if let Some(open) = &self.open_stage {
                    return Err(PipelineError::StageOpen(open.stage.ledger_label()));
                }
                let expected = self.state.ledger.len() as u32;
                if stage.index() != expected {
                    return Err(PipelineError::Inconsistent(format!(
                        "stage {} opened but {expected} stages are complete",
                        stage.ledger_label()
                    )));
                }
                if let Some(id) = auto_rejected.iter().find(|id| !self.state.unlabeled.contains(*id)) {
                    return Err(PipelineError::NotUnlabeled(id.clone()));
                }
            }
            Event::TaskCreated { task } => {
                let open = self
                    .open_stage
                    .as_ref()
                    .ok_or_else(|| PipelineError::Inconsistent("task created outside a stage".into()))?;
                if open.created == open.tasks || task.origin != open.stage {
                    return Err(PipelineError::Inconsistent(format!("task {} does not fit the open stage", task.task_id)));
                }
                if task.task_id != self.tasks.len() as u64 || !task.votes.is_empty() || !task.is_open() {
                    return Err(PipelineError::Inconsistent(format!("malformed new task {}", task.task_id)));
                }
                if !self.state.unlabeled.contains(&task.doc_id) {
                    return Err(PipelineError::NotUnlabeled(task.doc_id.clone()));
                }
            }
            Event::VoteRecorded { task_id, judge, .. } => {
                let task = self.task(*task_id).ok_or(PipelineError::UnknownTask(*task_id))?;
                if !task.is_open() {
                    return Err(PipelineError::TaskDecided(*task_id));
                }
                if task.vote_of(judge).is_some() {
                    return Err(PipelineError::ConflictingVote {
                        task: *task_id,
                        judge: judge.clone(),
                    });
                }
                if !self.state.unlabeled.contains(&task.doc_id) {
                    return Err(PipelineError::NotUnlabeled(task.doc_id.clone()));
                }
            }
            Event::Finalized { .. } => {
                if let Some(open) = &self.open_stage {
                    return Err(PipelineError::StageOpen(open.stage.ledger_label()));
                }
                if self.should_stop().is_none() {
                    return Err(PipelineError::NotStopped);
                }
            }
            Event::AuditOpened { quorum, tasks } => {
                super::validate_quorum(*quorum)?;
                for t in tasks {
                    match self.state.labeled.get(&t.doc_id) {
                        Some(e) if e.code == t.reference_code => {}
                        _ => return Err(PipelineError::UnknownDocument(t.doc_id.clone())),
                    }
                }
            }
            Event::AuditChoice { audit_id, judge, code } => {
                let board = self.audit.as_ref().ok_or(PipelineError::NoAudit)?;
                let task = board.task(*audit_id).ok_or(PipelineError::UnknownAuditTask(*audit_id))?;
                if !self.taxonomy.active_leaves().contains(code) {
                    return Err(PipelineError::NotActiveLeaf(code.clone()));
                }
                if task.choices.iter().any(|c| &c.0 == judge) {
                    return Err(PipelineError::ConflictingVote {
                        task: *audit_id,
                        judge: judge.clone(),
                    });
                }
                if task.outcome.is_some() {
                    return Err(PipelineError::TaskDecided(*audit_id));
                }
            }
            Event::VerdictApplied { .. } | Event::IterationClosed { .. } => {
                return Err(PipelineError::Inconsistent("checkpoint events are not applied directly".into()))
            }
        }
        Ok(())
    }

    /// Applies a validated event and returns the checkpoints it implies.
    fn apply(&mut self, event: &Event) -> Result<Vec<Event>, PipelineError> {
        let mut derived = Vec::new();
        match event {
            Event::StageOpened {
                stage,
                input,
                tasks,
                auto_rejected,
            } => {
                self.open_stage = Some(OpenStage {
                    stage: *stage,
                    input: *input,
                    tasks: *tasks,
                    created: 0,
                    decided: 0,
                    labeled: 0,
                    auto_rejected: auto_rejected.len(),
                });
                if *tasks == 0 {
                    derived.push(self.close_stage()?);
                }
            }
            Event::TaskCreated { task } => {
                self.open.insert(task.task_id);
                self.tasks.push(task.clone());
                if let Some(open) = &mut self.open_stage {
                    open.created += 1;
                }
            }
            Event::VoteRecorded {
                task_id,
                judge,
                decision,
            } => {
                let quorum = self.config.quorum;
                let task = &mut self.tasks[*task_id as usize];
                task.votes.push((judge.clone(), *decision));
                if task.votes.len() == quorum {
                    let verdict = Verdict::tally(task.votes.iter().map(|v| &v.1));
                    task.status = TaskStatus::Decided;
                    task.verdict = Some(verdict);
                    let (doc_id, code, origin) = (task.doc_id.clone(), task.candidate.clone(), task.origin);
                    self.open.remove(task_id);
                    self.apply_verdict(&doc_id, &code, origin, &verdict)?;
                    derived.push(Event::VerdictApplied {
                        task_id: *task_id,
                        doc_id,
                        code,
                        verdict,
                    });
                    let done = match &mut self.open_stage {
                        Some(open) => {
                            open.decided += 1;
                            open.labeled += usize::from(verdict.accepted());
                            open.decided == open.tasks && open.created == open.tasks
                        }
                        None => false,
                    };
                    if done {
                        derived.push(self.close_stage()?);
                    }
                }
            }
            Event::Finalized { reason, .. } => {
                for id in std::mem::take(&mut self.state.unlabeled) {
                    self.state.discarded.insert(id, reason.clone());
                }
                self.finalized = true;
            }
            Event::AuditOpened { quorum, tasks } => {
                self.audit = Some(AuditBoard {
                    quorum: *quorum,
                    tasks: tasks.clone(),
                });
            }
            Event::AuditChoice { audit_id, judge, code } => {
                if let Some(board) = &mut self.audit {
                    board.choose(*audit_id, judge, code.clone())?;
                }
            }
            Event::VerdictApplied { .. } | Event::IterationClosed { .. } => {}
        }
        self.state.check_counts()?;
        Ok(derived)
    }

    fn apply_verdict(&mut self, doc_id: &str, code: &CategoryCode, origin: Origin, verdict: &Verdict) -> Result<(), PipelineError> {
        if !self.state.unlabeled.contains(doc_id) {
            return Err(PipelineError::NotUnlabeled(doc_id.to_string()));
        }
        if verdict.accepted() {
            self.state.unlabeled.remove(doc_id);
            self.state.labeled.insert(
                doc_id.to_string(),
                CorpusEntry {
                    doc_id: doc_id.to_string(),
                    code: code.clone(),
                    origin,
                    decided_at: origin.index(),
                },
            );
        } else {
            self.state.rejected.insert((doc_id.to_string(), code.clone()));
        }
        Ok(())
    }

    fn close_stage(&mut self) -> Result<Event, PipelineError> {
        let open = self
            .open_stage
            .take()
            .ok_or_else(|| PipelineError::Inconsistent("no stage to close".into()))?;
        let row = LedgerRow {
            stage: open.stage,
            input: open.input,
            labeled: open.labeled,
            remaining: self.state.unlabeled.len(),
            auto_rejected: open.auto_rejected,
        };
        self.state.ledger.push(row.clone());
        self.state.iteration += 1;
        if open.stage == Origin::Wecos {
            let observed: BTreeSet<CategoryCode> = self.state.labeled.values().map(|e| e.code.clone()).collect();
            self.taxonomy = self.taxonomy.restrict_active(&observed)?;
            self.state.active_leaves = observed;
        }
        log::info!(
            "{} closed: {} in, {} labeled, {} remaining",
            row.stage.ledger_label(),
            row.input,
            row.labeled,
            row.remaining
        );
        Ok(Event::IterationClosed { row })
    }

    fn open_stage_with(&mut self, stage: Origin, tasks: Vec<ReviewTask>, auto_rejected: Vec<String>) -> Result<Vec<u64>, PipelineError> {
        self.emit(Event::StageOpened {
            stage,
            input: self.state.unlabeled.len(),
            tasks: tasks.len(),
            auto_rejected,
        })?;
        let mut ids = Vec::with_capacity(tasks.len());
        for task in tasks {
            ids.push(task.task_id);
            self.emit(Event::TaskCreated { task })?;
        }
        Ok(ids)
    }

    fn unlabeled_docs(&self) -> Vec<&Document> {
        self.state.unlabeled.iter().map(|id| &self.docs[id]).collect()
    }

    /// Module 1: one WE-cos candidate task per unlabeled document.
    pub fn module1_run(&mut self, emb: &EmbeddingTable) -> Result<Vec<u64>, PipelineError> {
        if self.finalized {
            return Err(PipelineError::Finalized);
        }
        if !self.state.ledger.is_empty() || self.open_stage.is_some() {
            return Err(PipelineError::Module1Done);
        }
        if self.state.unlabeled.is_empty() {
            return Err(PipelineError::NothingToLabel);
        }
        if self.taxonomy.active_leaves().is_empty() {
            return Err(PipelineError::NoActiveLeaves);
        }
        let docs: Vec<Document> = self.unlabeled_docs().into_iter().cloned().collect();
        let model = fit_reference_model(&docs, &self.taxonomy)?;
        let weighted = docs
            .par_iter()
            .map(|d| model.weigh(&d.id, &d.tokens))
            .collect::<Result<Vec<_>, _>>()?;
        let categories = weigh_categories(&self.taxonomy, &model)?;
        let index = CategoryIndex::new(&categories, emb, self.config.similarity)?;
        let batch = index.assign_all(&weighted);
        if batch.over_unity > 0 {
            log::warn!("{} WE-cos scores exceeded 1", batch.over_unity);
        }
        let base = self.tasks.len() as u64;
        let tasks = batch
            .candidates
            .into_iter()
            .enumerate()
            .map(|(i, c)| ReviewTask::new(base + i as u64, c.doc_id, c.code, c.score, Origin::Wecos))
            .collect();
        self.open_stage_with(Origin::Wecos, tasks, Vec::new())
    }

    fn check_module2(&self) -> Result<(), PipelineError> {
        if self.finalized {
            return Err(PipelineError::Finalized);
        }
        if let Some(open) = &self.open_stage {
            return Err(PipelineError::StageOpen(open.stage.ledger_label()));
        }
        if self.state.ledger.is_empty() {
            return Err(PipelineError::Module1Pending);
        }
        if let Some(reason) = self.should_stop() {
            return Err(PipelineError::Stopped(reason));
        }
        if self.state.labeled.is_empty() {
            return Err(PipelineError::NoLabels);
        }
        Ok(())
    }

    /// Trains the configured classifier on the current labeled set.
    pub fn train_current(&self) -> Result<Model, PipelineError> {
        self.check_module2()?;
        let data: Vec<(Vec<String>, CategoryCode)> = self
            .state
            .labeled
            .values()
            .map(|e| (self.docs[&e.doc_id].tokens.clone(), e.code.clone()))
            .collect();
        Ok(Model::train(&data, &self.config.classifier)?)
    }

    /// Module 2 iteration: train, predict every unlabeled document, and
    /// enqueue the predictions for review.
    pub fn module2_iterate(&mut self) -> Result<Vec<u64>, PipelineError> {
        let model = self.train_current()?;
        self.module2_iterate_with(&model)
    }

    /// Module 2 iteration with an already trained model. A prediction that
    /// repeats a rejected label is rejected without review.
    pub fn module2_iterate_with(&mut self, model: &Model) -> Result<Vec<u64>, PipelineError> {
        self.check_module2()?;
        let stage = Origin::Svm(self.state.ledger.len() as u32);
        let predictions: Vec<(String, CategoryCode, f64)> = self
            .unlabeled_docs()
            .par_iter()
            .map(|d| {
                let (code, score) = model.predict_scored(&d.tokens);
                (d.id.clone(), code, score)
            })
            .collect();
        let mut tasks = Vec::new();
        let mut auto_rejected = Vec::new();
        let base = self.tasks.len() as u64;
        for (doc_id, code, score) in predictions {
            if self.state.rejected.contains(&(doc_id.clone(), code.clone())) {
                auto_rejected.push(doc_id);
            } else {
                tasks.push(ReviewTask::new(base + tasks.len() as u64, doc_id, code, score, stage));
            }
        }
        self.open_stage_with(stage, tasks, auto_rejected)
    }

    /// Records one judge's vote. Re-sending an identical vote is a no-op.
    pub fn record_vote(&mut self, task_id: u64, judge: &str, decision: Decision) -> Result<VoteOutcome, PipelineError> {
        let task = self.task(task_id).ok_or(PipelineError::UnknownTask(task_id))?;
        match task.vote_of(judge) {
            Some(d) if d == decision => {
                return Ok(VoteOutcome::Duplicate {
                    votes: task.votes.len(),
                    status: task.status,
                })
            }
            Some(_) => {
                return Err(PipelineError::ConflictingVote {
                    task: task_id,
                    judge: judge.to_string(),
                })
            }
            None => {}
        }
        self.emit(Event::VoteRecorded {
            task_id,
            judge: judge.to_string(),
            decision,
        })?;
        let task = &self.tasks[task_id as usize];
        Ok(VoteOutcome::Recorded {
            votes: task.votes.len(),
            verdict: task.verdict,
        })
    }

    /// Discards the remainder once the stop rule has fired.
    pub fn finalize(&mut self) -> Result<FinalReport, PipelineError> {
        if self.finalized {
            return Err(PipelineError::Finalized);
        }
        let reason = self.should_stop().ok_or(PipelineError::NotStopped)?;
        let discarded: Vec<String> = self.state.unlabeled.iter().cloned().collect();
        self.emit(Event::Finalized {
            reason: reason.to_string(),
            discarded: discarded.len(),
        })?;
        Ok(FinalReport {
            reason,
            labeled: self.state.labeled.len(),
            discarded,
        })
    }

    pub fn export_records(&self) -> Vec<ExportRecord> {
        self.state
            .labeled
            .values()
            .map(|e| {
                let d = &self.docs[&e.doc_id];
                ExportRecord {
                    doc_id: e.doc_id.clone(),
                    title: d.title.clone(),
                    description: d.body.clone(),
                    code: e.code.clone(),
                    top_level: e.code.top_level(),
                    origin: e.origin,
                    iteration: e.decided_at,
                }
            })
            .collect()
    }

    /// Writes the labeled corpus as JSONL sorted by document id.
    pub fn export(&self, path: impl AsRef<Path>) -> Result<usize, PipelineError> {
        let records = self.export_records();
        io::write_jsonl(path.as_ref(), &records)?;
        Ok(records.len())
    }

    pub fn corpus(&self) -> Vec<CorpusEntry> {
        self.state.labeled.values().cloned().collect()
    }

    pub fn progress(&self) -> Progress {
        let decided: Vec<&ReviewTask> = self.tasks.iter().filter(|t| !t.is_open()).collect();
        let accepted = decided
            .iter()
            .filter(|t| t.verdict.is_some_and(|v| v.accepted()))
            .count();
        let auto_rejected = self.state.ledger.iter().map(|r| r.auto_rejected).sum::<usize>()
            + self.open_stage.as_ref().map_or(0, |o| o.auto_rejected);
        Progress {
            open: self.open.len(),
            decided: decided.len(),
            accepted,
            rejected: decided.len() - accepted,
            auto_rejected,
            iteration: self.state.iteration,
            stage: self.open_stage.as_ref().map(|o| o.stage),
            labeled: self.state.labeled.len(),
            unlabeled: self.state.unlabeled.len(),
            discarded: self.state.discarded.len(),
            input_total: self.state.input_total,
            percent_unlabeled: 100.0 * self.state.fraction_unlabeled(),
            stop_reason: self.should_stop().map(|r| r.to_string()),
            finalized: self.finalized,
        }
    }

    /// Samples `n` labeled entries for direct re-labeling by the judges.
    pub fn open_audit(&mut self, n: usize, quorum: usize, seed: u64) -> Result<usize, PipelineError> {
        let board = AuditBoard::sample(&self.corpus(), n, quorum, seed)?;
        let count = board.tasks.len();
        self.emit(Event::AuditOpened {
            quorum: board.quorum,
            tasks: board.tasks,
        })?;
        Ok(count)
    }

    /// Records an audit choice. Repeating the same choice is a no-op.
    pub fn record_audit_choice(&mut self, audit_id: u64, judge: &str, code: CategoryCode) -> Result<AuditTask, PipelineError> {
        let board = self.audit.as_ref().ok_or(PipelineError::NoAudit)?;
        let task = board.task(audit_id).ok_or(PipelineError::UnknownAuditTask(audit_id))?;
        if let Some(prev) = task.choices.iter().find(|c| c.0 == judge) {
            if prev.1 == code {
                return Ok(task.clone());
            }
        }
        self.emit(Event::AuditChoice {
            audit_id,
            judge: judge.to_string(),
            code,
        })?;
        Ok(self.audit.as_ref().and_then(|b| b.task(audit_id)).cloned().expect("audit task exists"))
    }
}

/// Casts a full quorum of identical oracle votes on every open task.
/// Returns the number of tasks decided.
pub fn drive_with_oracle<O: JudgementOracle + ?Sized>(session: &mut Session, oracle: &mut O) -> Result<usize, PipelineError> {
    let ids: Vec<u64> = session.open_tasks().collect();
    let quorum = session.config().quorum;
    for &id in &ids {
        let task = session.task(id).expect("open task exists");
        let ok = oracle
            .judge(&task.doc_id, &task.candidate)
            .map_err(|e| PipelineError::Inconsistent(e.to_string()))?;
        let decision = if ok { Decision::Yes } else { Decision::No };
        for k in 0..quorum {
            session.record_vote(id, &format!("oracle-{k}"), decision)?;
        }
    }
    Ok(ids.len())
}
