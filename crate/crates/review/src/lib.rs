//! Review service for a jobcorpus pipeline session: an HTTP API for judges,
//! a headless judge client, the on-disk workspace and the command line.

pub mod api;
pub mod cli;
pub mod client;
pub mod desk;
pub mod wire;
pub mod workspace;

pub use client::{run_judge, JudgeClient, JudgePolicy, JudgeRun, JudgeSummary};
pub use desk::{DeskConfig, DeskError, ReviewDesk};
pub use workspace::Workspace;
