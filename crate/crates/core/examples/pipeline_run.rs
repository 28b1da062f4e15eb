// Runs the full labeling loop on a synthetic corpus with a simulated judge
// quorum: embedding-cosine candidates first, then classifier rounds until
// the stop rule fires.

use jobcorpus::pipeline::{corpus_stats, drive_with_oracle, PipelineConfig, Session};
use jobcorpus::synth::{SynthConfig, SynthCorpus};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let s = SynthCorpus::generate(SynthConfig {
        categories: 8,
        docs_per_category: 40,
        ..SynthConfig::default()
    })?;
    let mut session = Session::new(s.documents.clone(), s.taxonomy.clone(), PipelineConfig::default())?;
    let mut oracle = s.oracle();

    let opened = session.module1_run(&s.embeddings)?;
    println!("module 1 opened {} review tasks", opened.len());
    loop {
        drive_with_oracle(&mut session, &mut oracle)?;
        if session.should_stop().is_some() {
            break;
        }
        let opened = session.module2_iterate()?;
        println!("module 2 opened {} review tasks", opened.len());
    }
    let report = session.finalize()?;
    print!("{}", session.state().ledger_table());
    println!("stopped: {}, {} labeled, {} discarded", report.reason, report.labeled, report.discarded.len());

    let stats = corpus_stats(&session.corpus(), session.taxonomy(), &[10, 20])?;
    print!("{stats}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
