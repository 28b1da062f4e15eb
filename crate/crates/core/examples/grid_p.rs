// Sweeps the token-pair threshold on a synthetic corpus and reports the
// accuracy of the first-stage labels against its ground truth.

use jobcorpus::similarity::grid_p_documents;
use jobcorpus::synth::{SynthConfig, SynthCorpus};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let s = SynthCorpus::generate(SynthConfig {
        categories: 8,
        docs_per_category: 30,
        ..SynthConfig::default()
    })?;
    let report = grid_p_documents(&s.documents, &s.taxonomy, &s.embeddings, &[0.4, 0.6, 0.8, 0.9], None, &mut s.oracle())?;
    print!("{report}");
    if let Some(best) = report.best() {
        println!("best p = {}", best.p);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
