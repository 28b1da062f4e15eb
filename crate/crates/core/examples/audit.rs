// Samples a finished corpus for a re-labeling audit. Judges pick leaf
// codes blind, and the report compares their majority with the corpus label.

use jobcorpus::pipeline::{audit_run, drive_with_oracle, PipelineConfig, Session};
use jobcorpus::synth::{SynthConfig, SynthCorpus};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let s = SynthCorpus::generate(SynthConfig {
        categories: 4,
        docs_per_category: 20,
        ..SynthConfig::default()
    })?;
    let mut session = Session::new(s.documents.clone(), s.taxonomy.clone(), PipelineConfig::default())?;
    session.module1_run(&s.embeddings)?;
    drive_with_oracle(&mut session, &mut s.oracle())?;

    // One judge out of three disagrees on every task; the majority still holds.
    let leaves: Vec<_> = s.taxonomy.leaves().map(|n| n.code.clone()).collect();
    let report = audit_run(&session.corpus(), 12, 3, 7, |task, k| {
        let truth = s.truth[&task.doc_id].clone();
        if k == 2 {
            leaves.iter().find(|c| **c != truth).cloned().unwrap_or(truth)
        } else {
            truth
        }
    })?;
    print!("{report}");
    assert_eq!(report.correct, report.total);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
