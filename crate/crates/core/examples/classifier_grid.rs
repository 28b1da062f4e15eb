// Tunes the SVM and random forest on labeled synthetic postings, then
// trains the winner and round-trips it through a model file.

use jobcorpus::classifiers::{grid_search, GridSpec, Model};
use jobcorpus::synth::{SynthConfig, SynthCorpus};
use jobcorpus::taxonomy::CategoryCode;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let s = SynthCorpus::generate(SynthConfig {
        categories: 6,
        docs_per_category: 30,
        ..SynthConfig::default()
    })?;
    let labeled: Vec<(Vec<String>, CategoryCode)> =
        s.documents.iter().map(|d| (d.tokens.clone(), s.truth[&d.id].clone())).collect();

    let spec = GridSpec {
        svm_gammas: vec![0.06, 0.6],
        rf_trees: vec![20],
        min_counts: vec![1, 3],
        ..GridSpec::default()
    };
    let report = grid_search(&labeled, &spec)?;
    print!("{report}");
    let best = report.winner(None).ok_or("no grid cell trained")?;
    println!("winner: {:?} param {} min_count {} accuracy {:.3}", best.family, best.param, best.min_count, best.accuracy.unwrap_or(0.0));

    let model = Model::train(&labeled, &spec.config(best.family, best.param, best.min_count))?;
    let path = std::env::temp_dir().join(format!("jobcorpus-example-{}.json", std::process::id()));
    model.save(&path)?;
    let loaded = Model::load(&path)?;
    std::fs::remove_file(&path)?;
    let (code, score) = loaded.predict_scored(&labeled[0].0);
    println!("{} predicted {code} (score {score:.3}), truth {}", s.documents[0].id, labeled[0].1);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
