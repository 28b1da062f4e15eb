//! HTTP routes over a [`ReviewDesk`].

use std::future::Future;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use jobcorpus::pipeline::PipelineError;
use serde::Deserialize;
use tokio::net::TcpListener;

use crate::desk::{DeskError, ReviewDesk};
use crate::wire::{ChoiceRequest, ErrorBody, VoteRequest};

pub struct ApiError(DeskError);

impl From<DeskError> for ApiError {
    fn from(e: DeskError) -> Self {
        Self(e)
    }
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match &self.0 {
            DeskError::UnknownJudge(_) => StatusCode::UNAUTHORIZED,
            DeskError::Pipeline(e) => match e {
                PipelineError::UnknownTask(_) | PipelineError::UnknownAuditTask(_) | PipelineError::NoAudit => {
                    StatusCode::NOT_FOUND
                }
                PipelineError::ConflictingVote { .. }
                | PipelineError::TaskDecided(_)
                | PipelineError::NotUnlabeled(_)
                | PipelineError::Finalized => StatusCode::CONFLICT,
                PipelineError::NotActiveLeaf(_) => StatusCode::UNPROCESSABLE_ENTITY,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            log::error!("{}", self.0);
        }
        (status, Json(ErrorBody { error: self.0.to_string() })).into_response()
    }
}

#[derive(Debug, Deserialize)]
struct JudgeQuery {
    judge: String,
}

#[derive(Debug, Deserialize)]
struct LeafQuery {
    #[serde(default)]
    q: String,
}

type Desk = State<Arc<ReviewDesk>>;

async fn next_task(State(desk): Desk, Query(q): Query<JudgeQuery>) -> Result<Response, ApiError> {
    Ok(match desk.next_task(&q.judge)? {
        Some(view) => Json(view).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn vote(State(desk): Desk, Path(id): Path<u64>, Json(req): Json<VoteRequest>) -> Result<Response, ApiError> {
    let d = desk.clone();
    // Votes append to the event log, so keep them off the async workers.
    let status = tokio::task::spawn_blocking(move || d.record_vote(id, &req.judge, req.decision))
        .await
        .expect("vote task panicked")?;
    if desk.config().auto_advance && desk.ready_to_advance() {
        let d = desk.clone();
        tokio::task::spawn_blocking(move || {
            if let Err(e) = d.advance() {
                log::error!("could not open the next stage: {e}");
            }
        });
    }
    Ok(Json(status).into_response())
}

async fn progress(State(desk): Desk) -> Response {
    Json(desk.progress()).into_response()
}

async fn next_audit(State(desk): Desk, Query(q): Query<JudgeQuery>) -> Result<Response, ApiError> {
    Ok(match desk.next_audit(&q.judge)? {
        Some(view) => Json(view).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn choice(State(desk): Desk, Path(id): Path<u64>, Json(req): Json<ChoiceRequest>) -> Result<Response, ApiError> {
    let status = tokio::task::spawn_blocking(move || desk.record_choice(id, &req.judge, req.code))
        .await
        .expect("choice task panicked")?;
    Ok(Json(status).into_response())
}

async fn leaves(State(desk): Desk, Query(q): Query<LeafQuery>) -> Response {
    Json(desk.leaves(&q.q)).into_response()
}

pub fn router(desk: Arc<ReviewDesk>) -> Router {
    Router::new()
        .route("/api/tasks/next", get(next_task))
        .route("/api/tasks/{id}/vote", post(vote))
        .route("/api/progress", get(progress))
        .route("/api/audit/next", get(next_audit))
        .route("/api/audit/{id}/choice", post(choice))
        .route("/api/taxonomy/leaves", get(leaves))
        .with_state(desk)
}

/// Serves the API on `listener` until `shutdown` resolves.
pub async fn serve(listener: TcpListener, desk: Arc<ReviewDesk>, shutdown: impl Future<Output = ()> + Send + 'static) -> std::io::Result<()> {
    axum::serve(listener, router(desk)).with_graceful_shutdown(shutdown).await
}
