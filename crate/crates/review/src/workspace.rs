//! On-disk layout of one corpus-construction run.
//!
//! ```text
//! <dir>/config.json     pipeline settings and the embedding file path
//! <dir>/docs.jsonl      preprocessed documents
//! <dir>/taxonomy.jsonl  code, label, description rows
//! <dir>/stops.txt       optional stop list used for the taxonomy
//! <dir>/events.jsonl    append-only event log
//! <dir>/snapshot.json   latest checkpoint
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use jobcorpus::embedding::EmbeddingTable;
use jobcorpus::io;
use jobcorpus::pipeline::{read_events, EventLog, PipelineConfig, Session, Snapshot};
use jobcorpus::taxonomy::Taxonomy;
use jobcorpus::text_prep::{Document, Preprocessor, StopList};
use serde::{Deserialize, Serialize};

pub const WORKSPACE_FORMAT: &str = "jobcorpus-workspace";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceConfig {
    pub format: String,
    /// Relative paths are resolved against the workspace directory.
    pub embeddings: PathBuf,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Clone)]
pub struct Workspace {
    dir: PathBuf,
    config: WorkspaceConfig,
}

impl Workspace {
    /// Creates a workspace from preprocessed documents and a taxonomy file.
    /// Refuses to overwrite an existing one.
    pub fn init(
        dir: impl AsRef<Path>,
        docs: &Path,
        taxonomy: &Path,
        embeddings: &Path,
        stops: Option<&Path>,
        pipeline: PipelineConfig,
    ) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        if dir.join("config.json").exists() {
            bail!("{} already holds a workspace", dir.display());
        }
        pipeline.validate()?;
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let copy = |from: &Path, name: &str| {
            std::fs::copy(from, dir.join(name)).with_context(|| format!("copying {}", from.display()))
        };
        copy(docs, "docs.jsonl")?;
        copy(taxonomy, "taxonomy.jsonl")?;
        if let Some(stops) = stops {
            copy(stops, "stops.txt")?;
        }
        let embeddings = std::path::absolute(embeddings)?;
        let config = WorkspaceConfig {
            format: WORKSPACE_FORMAT.into(),
            embeddings,
            pipeline,
        };
        io::write_json(&dir.join("config.json"), &config)?;
        let ws = Self { dir, config };
        // Fail now rather than at the first stage.
        ws.session()?;
        Ok(ws)
    }

    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let config: WorkspaceConfig =
            io::read_json(&dir.join("config.json")).with_context(|| format!("{} is not a workspace", dir.display()))?;
        if config.format != WORKSPACE_FORMAT {
            bail!("unexpected workspace format `{}`", config.format);
        }
        Ok(Self { dir, config })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn config(&self) -> &WorkspaceConfig {
        &self.config
    }

    pub fn events_path(&self) -> PathBuf {
        self.dir.join("events.jsonl")
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.dir.join("snapshot.json")
    }

    pub fn preprocessor(&self) -> Result<Preprocessor> {
        let stops = self.dir.join("stops.txt");
        Ok(if stops.exists() {
            Preprocessor::with_stops(StopList::load(&stops)?)
        } else {
            Preprocessor::default()
        })
    }

    pub fn documents(&self) -> Result<Vec<Document>> {
        Ok(io::read_jsonl(&self.dir.join("docs.jsonl"))?)
    }

    pub fn taxonomy(&self) -> Result<Taxonomy> {
        Ok(Taxonomy::load(self.dir.join("taxonomy.jsonl"), &self.preprocessor()?)?)
    }

    pub fn embeddings(&self) -> Result<EmbeddingTable> {
        let path = self.dir.join(&self.config.embeddings);
        EmbeddingTable::load(&path).with_context(|| format!("loading embeddings from {}", path.display()))
    }

    /// Restores the session from the snapshot and the log, and attaches the
    /// log for further events.
    pub fn session(&self) -> Result<Session> {
        let snapshot = match self.snapshot_path() {
            p if p.exists() => Some(Snapshot::load(&p)?),
            _ => None,
        };
        let events = read_events(self.events_path())?;
        let mut session = Session::restore(self.documents()?, self.taxonomy()?, self.config.pipeline, snapshot, &events)?;
        session.attach_log(EventLog::open(self.events_path())?);
        Ok(session)
    }

    pub fn checkpoint(&self, session: &Session) -> Result<()> {
        session.snapshot().save(self.snapshot_path())?;
        Ok(())
    }
}
