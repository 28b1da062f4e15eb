use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::audit::{AuditBoard, AuditTask};
use super::session::OpenStage;
use super::state::{LedgerRow, PipelineState};
use super::{Decision, Origin, PipelineError, ReviewTask, Verdict};
use crate::io::{self, RecordError};
use crate::taxonomy::CategoryCode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    StageOpened {
        stage: Origin,
        input: usize,
        tasks: usize,
        auto_rejected: Vec<String>,
    },
    TaskCreated {
        task: ReviewTask,
    },
    VoteRecorded {
        task_id: u64,
        judge: String,
        decision: Decision,
    },
    /// Written after the vote that completed the quorum; replay recomputes it.
    VerdictApplied {
        task_id: u64,
        doc_id: String,
        code: CategoryCode,
        verdict: Verdict,
    },
    /// Written when a stage's last task is decided; replay recomputes it.
    IterationClosed {
        row: LedgerRow,
    },
    Finalized {
        reason: String,
        discarded: usize,
    },
    AuditOpened {
        quorum: usize,
        tasks: Vec<AuditTask>,
    },
    AuditChoice {
        audit_id: u64,
        judge: String,
        code: CategoryCode,
    },
}

impl Event {
    /// Checkpoint events follow from earlier ones and are skipped on replay.
    pub fn is_derived(&self) -> bool {
        matches!(self, Self::VerdictApplied { .. } | Self::IterationClosed { .. })
    }
}

/// A logged event. Derived events carry the sequence number of the event
/// that caused them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    #[serde(flatten)]
    pub event: Event,
}

/// Append-only JSONL event log, flushed after every record.
pub struct EventLog {
    path: PathBuf,
    out: BufWriter<File>,
}

impl EventLog {
    /// Opens for appending. A torn final line is cut off first so new
    /// records start on a fresh line.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, RecordError> {
        let path = path.as_ref().to_path_buf();
        let err = |source| RecordError::Io {
            path: path.clone(),
            source,
        };
        if path.exists() {
            let bytes = std::fs::read(&path).map_err(err)?;
            if !bytes.is_empty() && bytes.last() != Some(&b'\n') {
                let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
                let f = OpenOptions::new().write(true).open(&path).map_err(err)?;
                f.set_len(keep as u64).map_err(err)?;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(err)?;
        Ok(Self {
            path,
            out: BufWriter::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, record: &EventRecord) -> Result<(), RecordError> {
        let err = |source| RecordError::Io {
            path: self.path.clone(),
            source,
        };
        let line = serde_json::to_string(record).expect("events serialize");
        self.out.write_all(line.as_bytes()).map_err(err)?;
        self.out.write_all(b"\n").map_err(err)?;
        self.out.flush().map_err(err)
    }
}

/// Reads a log, tolerating a torn final line left by a crash mid-write.
/// A missing file is an empty log.
pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<EventRecord>, RecordError> {
    let path = path.as_ref();
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = io::read_to_string(path)?;
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(_) if i + 1 == lines.len() && !complete => {
                log::warn!("{}: ignoring torn final line", path.display());
            }
            Err(source) => {
                return Err(RecordError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    source,
                })
            }
        }
    }
    Ok(out)
}

pub const SNAPSHOT_FORMAT: &str = "jobcorpus-snapshot";

/// Session state as of event `seq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub format: String,
    pub seq: u64,
    pub state: PipelineState,
    pub(crate) tasks: Vec<ReviewTask>,
    pub(crate) open_stage: Option<OpenStage>,
    pub(crate) finalized: bool,
    pub(crate) audit: Option<AuditBoard>,
}

impl Snapshot {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RecordError> {
        // Write then rename so a crash never leaves a partial snapshot.
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        io::write_json(&tmp, self)?;
        std::fs::rename(&tmp, path).map_err(|source| RecordError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let snap: Snapshot = io::read_json(path.as_ref())?;
        if snap.format != SNAPSHOT_FORMAT {
            return Err(PipelineError::Inconsistent(format!("unexpected snapshot format `{}`", snap.format)));
        }
        Ok(snap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_round_trip_and_torn_tail_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let recs = vec![
            EventRecord {
                seq: 1,
                event: Event::StageOpened {
                    stage: Origin::Wecos,
                    input: 3,
                    tasks: 3,
                    auto_rejected: vec![],
                },
            },
            EventRecord {
                seq: 2,
                event: Event::VoteRecorded {
                    task_id: 0,
                    judge: "j1".into(),
                    decision: Decision::Yes,
                },
            },
        ];
        let mut log = EventLog::open(&path).unwrap();
        for r in &recs {
            log.append(r).unwrap();
        }
        drop(log);
        assert_eq!(read_events(&path).unwrap(), recs);
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"seq\":3,\"type\":\"vote_rec").unwrap();
        assert_eq!(read_events(&path).unwrap(), recs);
        assert!(read_events(dir.path().join("none.jsonl")).unwrap().is_empty());
        drop(f);
        let mut log = EventLog::open(&path).unwrap();
        log.append(&recs[1]).unwrap();
        assert_eq!(read_events(&path).unwrap().len(), 3);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        std::fs::write(&path, "garbage\n{\"seq\":1,\"type\":\"finalized\",\"reason\":\"x\",\"discarded\":0}\n").unwrap();
        assert!(matches!(read_events(&path), Err(RecordError::Parse { line: 1, .. })));
    }
}
