use std::collections::BTreeMap;
use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{validate_quorum, CorpusEntry, PipelineError};
use crate::taxonomy::CategoryCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditOutcome {
    Correct,
    Incorrect,
    Uncertain,
}

/// A corpus entry re-labeled from scratch by the judges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditTask {
    pub audit_id: u64,
    pub doc_id: String,
    pub reference_code: CategoryCode,
    pub choices: Vec<(String, CategoryCode)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<AuditOutcome>,
}

/// The code chosen by a strict majority of `quorum`, if any.
pub fn majority_code(choices: &[CategoryCode], quorum: usize) -> Option<&CategoryCode> {
    let mut counts: BTreeMap<&CategoryCode, usize> = BTreeMap::new();
    for c in choices {
        *counts.entry(c).or_default() += 1;
    }
    counts.into_iter().find(|e| e.1 * 2 > quorum).map(|e| e.0)
}

impl AuditTask {
    fn decide(&mut self, quorum: usize) {
        let codes: Vec<CategoryCode> = self.choices.iter().map(|c| c.1.clone()).collect();
        self.outcome = Some(match majority_code(&codes, quorum) {
            Some(c) if *c == self.reference_code => AuditOutcome::Correct,
            Some(_) => AuditOutcome::Incorrect,
            None => AuditOutcome::Uncertain,
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub total: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub uncertain: usize,
    /// Decided tasks still waiting for choices are excluded from the counts.
    pub pending: usize,
    pub accuracy: f64,
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<20}{:<36}{:<38}{:<26}{}",
            "# of total samples",
            "# of correctly classified samples",
            "# of incorrectly classified samples",
            "# of uncertain samples",
            "Accuracy rate"
        )?;
        writeln!(
            f,
            "{:<20}{:<36}{:<38}{:<26}{:.3}",
            self.total, self.correct, self.incorrect, self.uncertain, self.accuracy
        )?;
        if self.pending > 0 {
            writeln!(f, "({} samples still pending)", self.pending)?;
        }
        Ok(())
    }
}

/// Open audit tasks and the choices recorded so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditBoard {
    pub quorum: usize,
    pub tasks: Vec<AuditTask>,
}

impl AuditBoard {
    /// Samples `n` entries without replacement. Task ids follow doc id order.
    pub fn sample(corpus: &[CorpusEntry], n: usize, quorum: usize, seed: u64) -> Result<Self, PipelineError> {
        validate_quorum(quorum)?;
        if n > corpus.len() {
            return Err(PipelineError::SampleTooLarge { n, size: corpus.len() });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked: Vec<&CorpusEntry> = sample(&mut rng, corpus.len(), n).into_iter().map(|i| &corpus[i]).collect();
        picked.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        let tasks = picked
            .into_iter()
            .enumerate()
            .map(|(i, e)| AuditTask {
                audit_id: i as u64,
                doc_id: e.doc_id.clone(),
                reference_code: e.code.clone(),
                choices: Vec::new(),
                outcome: None,
            })
            .collect();
        Ok(Self { quorum, tasks })
    }

    pub fn task(&self, id: u64) -> Option<&AuditTask> {
        self.tasks.get(id as usize)
    }

    /// Records a judge's choice. Repeating the same choice is a no-op.
    pub fn choose(&mut self, id: u64, judge: &str, code: CategoryCode) -> Result<&AuditTask, PipelineError> {
        let quorum = self.quorum;
        let task = self.tasks.get_mut(id as usize).ok_or(PipelineError::UnknownAuditTask(id))?;
        if let Some(prev) = task.choices.iter().find(|c| c.0 == judge) {
            if prev.1 == code {
                return Ok(task);
            }
            return Err(PipelineError::ConflictingVote {
                task: id,
                judge: judge.to_string(),
            });
        }
        if task.outcome.is_some() {
            return Err(PipelineError::TaskDecided(id));
        }
        task.choices.push((judge.to_string(), code));
        if task.choices.len() == quorum {
            task.decide(quorum);
        }
        Ok(task)
    }

    /// First undecided task the judge has not answered.
    pub fn next_for(&self, judge: &str) -> Option<&AuditTask> {
        self.tasks
            .iter()
            .find(|t| t.outcome.is_none() && t.choices.iter().all(|c| c.0 != judge))
    }

    pub fn report(&self) -> AuditReport {
        let count = |o| self.tasks.iter().filter(|t| t.outcome == Some(o)).count();
        let (correct, incorrect, uncertain) = (
            count(AuditOutcome::Correct),
            count(AuditOutcome::Incorrect),
            count(AuditOutcome::Uncertain),
        );
        let decided = correct + incorrect + uncertain;
        AuditReport {
            total: decided,
            correct,
            incorrect,
            uncertain,
            pending: self.tasks.len() - decided,
            accuracy: if decided == 0 { 0.0 } else { correct as f64 / decided as f64 },
        }
    }
}

/// Runs an audit with in-process judges: `judge(task, k)` is judge `k`'s
/// chosen code for the task.
pub fn audit_run<F>(corpus: &[CorpusEntry], n: usize, quorum: usize, seed: u64, mut judge: F) -> Result<AuditReport, PipelineError>
where
    F: FnMut(&AuditTask, usize) -> CategoryCode,
{
    let mut board = AuditBoard::sample(corpus, n, quorum, seed)?;
    for id in 0..board.tasks.len() as u64 {
        for k in 0..quorum {
            let code = judge(&board.tasks[id as usize], k);
            board.choose(id, &format!("judge-{k}"), code)?;
        }
    }
    Ok(board.report())
}
