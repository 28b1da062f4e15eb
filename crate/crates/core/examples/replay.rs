// Records a session to an event log, then rebuilds it twice: from the log
// alone and from a mid-run snapshot plus the log tail.

use jobcorpus::pipeline::{drive_with_oracle, read_events, EventLog, PipelineConfig, Session, Snapshot};
use jobcorpus::synth::{SynthConfig, SynthCorpus};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let s = SynthCorpus::generate(SynthConfig {
        categories: 4,
        docs_per_category: 20,
        ..SynthConfig::default()
    })?;
    let dir = std::env::temp_dir().join(format!("jobcorpus-replay-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let log_path = dir.join("events.jsonl");

    let config = PipelineConfig::default();
    let mut session = Session::new(s.documents.clone(), s.taxonomy.clone(), config)?;
    session.attach_log(EventLog::open(&log_path)?);
    session.module1_run(&s.embeddings)?;
    let snapshot = session.snapshot();
    drive_with_oracle(&mut session, &mut s.oracle())?;
    if session.should_stop().is_none() {
        session.module2_iterate()?;
        drive_with_oracle(&mut session, &mut s.oracle())?;
    }

    let events = read_events(&log_path)?;
    println!("{} events, last seq {}", events.len(), session.seq());
    let from_log = Session::restore(s.documents.clone(), s.taxonomy.clone(), config, None, &events)?;
    assert_eq!(from_log.state(), session.state());

    let snap_path = dir.join("snapshot.json");
    snapshot.save(&snap_path)?;
    let from_snapshot =
        Session::restore(s.documents.clone(), s.taxonomy.clone(), config, Some(Snapshot::load(&snap_path)?), &events)?;
    assert_eq!(from_snapshot.state(), session.state());
    println!("both replays match: {} labeled", session.state().labeled.len());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
