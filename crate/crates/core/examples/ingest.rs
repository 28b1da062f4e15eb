// Cleans a small batch of postings: contact lines are stripped, garbled
// text is discarded and near duplicates are dropped.

use jobcorpus::text_prep::{ingest, Preprocessor, RawPosting};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let body = "Design and run data pipelines for the analytics team. \
                You will own ingestion, modelling and reporting jobs.";
    let batch = vec![
        RawPosting::new("a", "Data engineer", format!("{body} Apply at jobs@example.com today.")),
        RawPosting::new("b", "Data engineer", body),
        RawPosting::new("c", "Nurse", "Care for patients on the night ward and keep clinical records."),
        RawPosting::new("d", "???", "#### 1234 5678 %%%% 9999 @@@@ 0000"),
    ];
    let report = ingest(batch, &Preprocessor::default(), 0.8)?;
    println!("{}", report.summary());
    for d in &report.kept {
        println!("kept {}: {}", d.id, d.tokens.join(" "));
    }
    assert_eq!(report.kept.len(), 2);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
