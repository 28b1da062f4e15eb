// Serves a review desk on a local port and lets five headless judges work
// through every stage over HTTP. The desk trains the next classifier itself
// whenever a stage closes.

use std::sync::Arc;
use std::time::Duration;

use jobcorpus::pipeline::{PipelineConfig, Session};
use jobcorpus::synth::{SynthConfig, SynthCorpus};
use jobcorpus_review::{api, run_judge, DeskConfig, JudgeClient, JudgePolicy, JudgeRun, ReviewDesk};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let s = SynthCorpus::generate(SynthConfig {
        categories: 6,
        docs_per_category: 30,
        ..SynthConfig::default()
    })?;
    let mut session = Session::new(s.documents.clone(), s.taxonomy.clone(), PipelineConfig::default())?;
    session.module1_run(&s.embeddings)?;
    let judges: Vec<String> = (0..5).map(|k| format!("judge-{k}")).collect();
    let config = DeskConfig {
        auto_advance: true,
        ..DeskConfig::default()
    };
    let desk = Arc::new(ReviewDesk::new(session, judges.clone(), config));

    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
        let base = format!("http://{}", listener.local_addr()?);
        let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
        let server = tokio::spawn(api::serve(listener, desk.clone(), async {
            let _ = stopped.await;
        }));

        let mut handles = Vec::new();
        for j in &judges {
            let client = JudgeClient::new(&base, j.clone());
            let policy = JudgePolicy::Truth(s.truth.clone());
            let run = JudgeRun {
                max: None,
                poll: Some(Duration::from_millis(20)),
                audit: false,
            };
            handles.push(tokio::spawn(async move { run_judge(&client, &policy, run).await }));
        }
        for h in handles {
            let summary = h.await??;
            println!("judge cast {} votes ({} conflicts)", summary.votes, summary.conflicts);
        }
        let progress = JudgeClient::new(&base, "judge-0").progress().await?;
        println!("{}", serde_json::to_string_pretty(&progress)?);
        let _ = stop.send(());
        server.await??;
        Ok::<_, Box<dyn std::error::Error>>(())
    })?;

    print!("{}", desk.read().state().ledger_table());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
