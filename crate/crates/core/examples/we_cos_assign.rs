// Scores two postings against a tiny taxonomy with the thresholded
// embedding cosine and prints the candidate label of each.

use jobcorpus::embedding::EmbeddingTable;
use jobcorpus::similarity::{assign_candidate, fit_reference_model, weigh_categories, SimilarityConfig};
use jobcorpus::taxonomy::Taxonomy;
use jobcorpus::text_prep::{Preprocessor, RawPosting};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let prep = Preprocessor::default();
    let taxonomy = Taxonomy::from_rows(
        [
            ("1", "Technology", ""),
            ("1-01", "Software", ""),
            ("1-01-01", "Development", ""),
            ("1-01-01-01", "Backend developer", "writes server code and databases"),
            ("1-01-01-02", "Data analyst", "builds reports from data"),
        ],
        &prep,
    )?;
    // Three axes: engineering, data, filler.
    let emb = EmbeddingTable::from_vectors(
        3,
        [
            ("backend", [1.0, 0.0, 0.0]),
            ("developer", [0.9, 0.1, 0.0]),
            ("server", [0.95, 0.05, 0.0]),
            ("code", [0.8, 0.2, 0.0]),
            ("databases", [0.6, 0.4, 0.0]),
            ("rust", [0.9, 0.0, 0.1]),
            ("services", [0.85, 0.1, 0.05]),
            ("data", [0.1, 1.0, 0.0]),
            ("analyst", [0.05, 0.95, 0.0]),
            ("reports", [0.0, 0.9, 0.1]),
            ("spreadsheets", [0.0, 0.85, 0.15]),
            ("dashboards", [0.1, 0.9, 0.0]),
        ]
        .map(|(t, v)| (t, v.to_vec())),
    )?;

    let postings = [
        RawPosting::new("p1", "Rust engineer", "We need rust services on the server."),
        RawPosting::new("p2", "Reporting role", "Maintain dashboards and spreadsheets for the team."),
    ];
    let docs = postings
        .into_iter()
        .map(|p| prep.prepare(p).map_err(|d| format!("{d:?}")))
        .collect::<Result<Vec<_>, _>>()?;

    let model = fit_reference_model(&docs, &taxonomy)?;
    let categories = weigh_categories(&taxonomy, &model)?;
    let cfg = SimilarityConfig::default();
    for d in &docs {
        let w = model.weigh(&d.id, &d.tokens)?;
        let c = assign_candidate(&w, &categories, &emb, &cfg)?;
        let label = &taxonomy.node(&c.code)?.label;
        println!("{} -> {} {label} (score {:.3}, runner-up {:.3})", d.id, c.code, c.score, c.runner_up_score);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
