//! Construction of hierarchically labeled job-posting corpora.
//!
//! Postings are cleaned and segmented ([`text_prep`]), matched against a
//! four-level occupation taxonomy ([`taxonomy`]) with a thresholded
//! word-embedding cosine ([`similarity`], [`embedding`]), and the candidate
//! labels are confirmed by a judge quorum. Confirmed postings then train a
//! kernel SVM or random forest ([`classifiers`]) whose predictions go back to
//! the judges, iterating until the labeled corpus stops growing
//! ([`pipeline`]).

pub mod classifiers;
pub mod embedding;
pub mod io;
pub mod pipeline;
pub mod similarity;
pub mod synth;
pub mod taxonomy;
pub mod text_prep;
