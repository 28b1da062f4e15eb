//! The `jobcorpus` command line.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use jobcorpus::classifiers::{grid_search, ClassifierConfig, ClassifierKind, ForestParams, GridSpec, Model, SmoParams, SvmParams};
use jobcorpus::embedding::EmbeddingTable;
use jobcorpus::io;
use jobcorpus::pipeline::{corpus_stats, drive_with_oracle, PipelineConfig, Session, DEFAULT_LEAF_THRESHOLDS};
use jobcorpus::similarity::{
    fit_reference_model, grid_p, weigh_categories, AcceptAll, CategoryIndex, GroundTruthOracle, JudgementOracle,
    RejectAll, SimilarityConfig,
};
use jobcorpus::synth::{SynthConfig, SynthCorpus};
use jobcorpus::taxonomy::{CategoryCode, Taxonomy};
use jobcorpus::text_prep::{ingest, load_postings, Document, Preprocessor, StopList};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::api;
use crate::client::{run_judge, JudgeClient, JudgePolicy, JudgeRun};
use crate::desk::{DeskConfig, ReviewDesk};
use crate::workspace::Workspace;

#[derive(Debug, Parser)]
#[command(name = "jobcorpus", version, about = "Human-in-the-loop job-posting corpus construction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean, segment and deduplicate raw postings.
    Ingest(IngestArgs),
    /// Propose a WE-cos candidate category for every document.
    Assign(AssignArgs),
    /// Accuracy of WE-cos candidates across thresholds.
    #[command(name = "grid-p")]
    GridP(GridPArgs),
    /// Train a classifier on a labeled corpus.
    Train(TrainArgs),
    /// Hyper-parameter grid over SVM gammas, forest sizes and dictionary cut-offs.
    Grid(GridArgs),
    /// Create a workspace for a pipeline run.
    Init(InitArgs),
    /// Open the next pipeline stage.
    Run(RunArgs),
    /// Serve review tasks to judges over HTTP.
    Serve(ServeArgs),
    /// Headless judge against a running server.
    Judge(JudgeArgs),
    /// Per-top-level counts of the labeled corpus.
    Stats(StatsArgs),
    /// Open an audit sample, or report on it.
    Audit(AuditArgs),
    /// Finalize a stopped run and write the labeled corpus.
    Export(ExportArgs),
    /// Write a synthetic corpus with ground truth.
    Synth(SynthArgs),
}

/// `truth:<path>`, `accept` or `reject`.
#[derive(Debug, Clone)]
pub enum OracleSpec {
    Truth(PathBuf),
    Accept,
    Reject,
}

impl FromStr for OracleSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "accept" => Ok(Self::Accept),
            "reject" => Ok(Self::Reject),
            _ => match s.strip_prefix("truth:") {
                Some(p) if !p.is_empty() => Ok(Self::Truth(p.into())),
                _ => Err(format!("expected truth:<path>, accept or reject, got `{s}`")),
            },
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct TruthRow {
    doc_id: String,
    code: CategoryCode,
}

pub fn load_truth(path: &Path) -> Result<BTreeMap<String, CategoryCode>> {
    let rows: Vec<TruthRow> = io::read_jsonl(path)?;
    Ok(rows.into_iter().map(|r| (r.doc_id, r.code)).collect())
}

impl OracleSpec {
    fn oracle(&self) -> Result<Box<dyn JudgementOracle>> {
        Ok(match self {
            Self::Truth(p) => Box::new(GroundTruthOracle::new(load_truth(p)?.into_iter().collect())),
            Self::Accept => Box::new(AcceptAll),
            Self::Reject => Box::new(RejectAll),
        })
    }

    fn policy(&self) -> Result<JudgePolicy> {
        Ok(match self {
            Self::Truth(p) => JudgePolicy::Truth(load_truth(p)?),
            Self::Accept => JudgePolicy::AcceptAll,
            Self::Reject => JudgePolicy::RejectAll,
        })
    }
}

fn stop_list(path: Option<&Path>) -> Result<Preprocessor> {
    Ok(match path {
        Some(p) => Preprocessor::with_stops(StopList::load(p)?),
        None => Preprocessor::default(),
    })
}

fn load_docs(path: &Path) -> Result<Vec<Document>> {
    // Accept an ingest output directory as well as the kept file itself.
    let path = if path.is_dir() { path.join("kept.jsonl") } else { path.to_path_buf() };
    io::read_jsonl(&path).with_context(|| format!("reading documents from {}", path.display()))
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    postings: PathBuf,
    #[arg(long)]
    stops: Option<PathBuf>,
    #[arg(long, default_value_t = 0.9)]
    dedup_threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_ingest(a: IngestArgs) -> Result<()> {
    let prep = stop_list(a.stops.as_deref())?;
    let report = ingest(load_postings(&a.postings)?, &prep, a.dedup_threshold)?;
    std::fs::create_dir_all(&a.out)?;
    io::write_jsonl(&a.out.join("kept.jsonl"), &report.kept)?;
    io::write_jsonl(&a.out.join("dropped.jsonl"), &report.dropped)?;
    io::write_jsonl(&a.out.join("discarded.jsonl"), &report.discarded)?;
    println!("{}", report.summary());
    Ok(())
}

#[derive(Debug, Args)]
pub struct AssignArgs {
    /// Preprocessed documents, or an ingest output directory.
    #[arg(long)]
    postings: PathBuf,
    #[arg(long)]
    taxonomy: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    stops: Option<PathBuf>,
    #[arg(long, default_value_t = jobcorpus::similarity::DEFAULT_P)]
    p: f64,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_assign(a: AssignArgs) -> Result<()> {
    let docs = load_docs(&a.postings)?;
    let taxonomy = Taxonomy::load(&a.taxonomy, &stop_list(a.stops.as_deref())?)?;
    let emb = EmbeddingTable::load(&a.embeddings)?;
    let model = fit_reference_model(&docs, &taxonomy)?;
    let weighted = docs.iter().map(|d| model.weigh(&d.id, &d.tokens)).collect::<Result<Vec<_>, _>>()?;
    let cats = weigh_categories(&taxonomy, &model)?;
    let cfg = SimilarityConfig { p: a.p, threads: a.threads };
    let batch = CategoryIndex::new(&cats, &emb, cfg)?.assign_all(&weighted);
    io::write_jsonl(&a.out, &batch.candidates)?;
    println!("{} candidates written to {}", batch.candidates.len(), a.out.display());
    if batch.over_unity > 0 {
        println!("warning: {} scores exceeded 1", batch.over_unity);
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct GridPArgs {
    #[arg(long)]
    postings: PathBuf,
    #[arg(long)]
    taxonomy: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    stops: Option<PathBuf>,
    /// Random sample size; all documents when omitted.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.4,0.6,0.8,0.9")]
    p_list: Vec<f64>,
    #[arg(long)]
    oracle: OracleSpec,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    /// Also write the rows as JSON records.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn cmd_grid_p(a: GridPArgs) -> Result<()> {
    let docs = load_docs(&a.postings)?;
    let taxonomy = Taxonomy::load(&a.taxonomy, &stop_list(a.stops.as_deref())?)?;
    let emb = EmbeddingTable::load(&a.embeddings)?;
    // The reference statistics come from the whole collection either way.
    let model = fit_reference_model(&docs, &taxonomy)?;
    let picked: Vec<&Document> = match a.sample {
        Some(n) if n < docs.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let mut idx = rand::seq::index::sample(&mut rng, docs.len(), n).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| &docs[i]).collect()
        }
        _ => docs.iter().collect(),
    };
    let sample = picked.iter().map(|d| model.weigh(&d.id, &d.tokens)).collect::<Result<Vec<_>, _>>()?;
    let cats = weigh_categories(&taxonomy, &model)?;
    let mut oracle = a.oracle.oracle()?;
    let report = grid_p(&sample, &cats, &emb, &a.p_list[..], a.threads, oracle.as_mut())?;
    print!("{report}");
    if let Some(path) = a.json {
        io::write_jsonl(&path, &report.rows)?;
    }
    if let Some(e) = report.aborted {
        bail!("oracle failed: {e}");
    }
    Ok(())
}

/// A labeled training record: either tokens, or text to tokenize.
#[derive(Debug, Deserialize)]
struct CorpusRecord {
    code: CategoryCode,
    #[serde(default)]
    tokens: Option<Vec<String>>,
    #[serde(default)]
    title: String,
    #[serde(default)]
    description: String,
}

fn load_corpus(path: &Path, prep: &Preprocessor) -> Result<Vec<(Vec<String>, CategoryCode)>> {
    let rows: Vec<CorpusRecord> = io::read_jsonl(path)?;
    Ok(rows
        .into_iter()
        .map(|r| {
            let tokens = r.tokens.unwrap_or_else(|| prep.tokens(&format!("{}\n{}", r.title, r.description)));
            (tokens, r.code)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelKind {
    Svm,
    Rf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled JSONL: an export file, or records with `tokens` and `code`.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value = "svm")]
    model: ModelKind,
    #[arg(long, default_value_t = 0.6)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 300)]
    trees: usize,
    #[arg(long, default_value_t = 3)]
    min_count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    stops: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus, &stop_list(a.stops.as_deref())?)?;
    let kind = match a.model {
        ModelKind::Svm => ClassifierKind::Svm(SvmParams {
            gamma: a.gamma,
            smo: SmoParams { c: a.c, ..SmoParams::default() },
        }),
        ModelKind::Rf => ClassifierKind::Forest(ForestParams {
            num_trees: a.trees,
            seed: a.seed,
            ..ForestParams::default()
        }),
    };
    let cfg = ClassifierConfig {
        kind,
        min_count: a.min_count,
        ..ClassifierConfig::default()
    };
    let model = Model::train(&corpus, &cfg)?;
    model.save(&a.out)?;
    println!(
        "trained on {} documents, {} classes, dictionary of {}; saved to {}",
        corpus.len(),
        model.classes().len(),
        model.dictionary.len(),
        a.out.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.06,0.6,6")]
    svm_gammas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "100,300,500")]
    rf_trees: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    min_counts: Vec<usize>,
    #[arg(long, default_value_t = 0.7)]
    train_ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    stops: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn cmd_grid(a: GridArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus, &stop_list(a.stops.as_deref())?)?;
    let spec = GridSpec {
        svm_gammas: a.svm_gammas.clone(),
        rf_trees: a.rf_trees.clone(),
        min_counts: a.min_counts.clone(),
        train_ratio: a.train_ratio,
        seed: a.seed,
        ..GridSpec::default()
    };
    let report = grid_search(&corpus, &spec)?;
    print!("{report}");
    if let Some(path) = a.json {
        io::write_json(&path, &report)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct InitArgs {
    #[arg(long)]
    workspace: PathBuf,
    /// Preprocessed documents, or an ingest output directory.
    #[arg(long)]
    docs: PathBuf,
    #[arg(long)]
    taxonomy: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    stops: Option<PathBuf>,
    #[arg(long, env = "JOBCORPUS_QUORUM", default_value_t = 5)]
    quorum: usize,
    #[arg(long, default_value_t = jobcorpus::similarity::DEFAULT_P)]
    p: f64,
    #[arg(long, default_value_t = 0.05)]
    stop_fraction: f64,
}

fn cmd_init(a: InitArgs) -> Result<()> {
    let docs = if a.docs.is_dir() { a.docs.join("kept.jsonl") } else { a.docs.clone() };
    let config = PipelineConfig {
        quorum: a.quorum,
        stop_fraction: a.stop_fraction,
        similarity: SimilarityConfig::with_p(a.p)?,
        ..PipelineConfig::default()
    };
    let ws = Workspace::init(&a.workspace, &docs, &a.taxonomy, &a.embeddings, a.stops.as_deref(), config)?;
    println!("workspace ready at {}", ws.dir().display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Module1,
    Module2,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    workspace: PathBuf,
    #[arg(long, value_enum)]
    stage: Stage,
    /// Use this model for module 2 instead of training on the current corpus.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Answer the new tasks with a simulated judge panel.
    #[arg(long)]
    oracle: Option<OracleSpec>,
    /// With an oracle, keep iterating module 2 until the stop rule fires.
    #[arg(long, requires = "oracle")]
    until_stop: bool,
}

fn print_state(session: &Session) {
    print!("{}", session.state().ledger_table());
    if let Some(reason) = session.should_stop() {
        println!("stop: {reason}");
    }
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let ws = Workspace::open(&a.workspace)?;
    let mut session = ws.session()?;
    let mut oracle = a.oracle.as_ref().map(OracleSpec::oracle).transpose()?;
    let result = (|| -> Result<()> {
        match a.stage {
            Stage::Module1 => {
                let ids = session.module1_run(&ws.embeddings()?)?;
                println!("module 1 opened {} review tasks", ids.len());
                if let Some(o) = oracle.as_mut() {
                    drive_with_oracle(&mut session, o.as_mut())?;
                }
            }
            Stage::Module2 => loop {
                if let Some(reason) = session.should_stop() {
                    println!("nothing to do: {reason}");
                    break;
                }
                let ids = match &a.model {
                    Some(p) => session.module2_iterate_with(&Model::load(p)?)?,
                    None => session.module2_iterate()?,
                };
                println!("stage {} opened {} review tasks", session.state().iteration, ids.len());
                match oracle.as_mut() {
                    Some(o) => {
                        drive_with_oracle(&mut session, o.as_mut())?;
                    }
                    None => break,
                }
                if !a.until_stop {
                    break;
                }
            },
        }
        Ok(())
    })();
    ws.checkpoint(&session)?;
    result?;
    print_state(&session);
    Ok(())
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    workspace: PathBuf,
    #[arg(long, env = "JOBCORPUS_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// Comma-separated judge tokens.
    #[arg(long, env = "JOBCORPUS_JUDGES", value_delimiter = ',')]
    judges: Vec<String>,
    /// Minutes before an unanswered task is handed to someone else.
    #[arg(long, env = "JOBCORPUS_REISSUE_MINUTES", default_value_t = 15)]
    reissue_minutes: u64,
    /// Train and open the next module-2 stage whenever one closes.
    #[arg(long)]
    auto_advance: bool,
}

fn cmd_serve(a: ServeArgs) -> Result<()> {
    let ws = Workspace::open(&a.workspace)?;
    let session = ws.session()?;
    if a.judges.is_empty() {
        bail!("no judges registered; pass --judges or set JOBCORPUS_JUDGES");
    }
    let config = DeskConfig {
        reissue_after: Duration::from_secs(60 * a.reissue_minutes),
        auto_advance: a.auto_advance,
    };
    let desk = Arc::new(ReviewDesk::new(session, a.judges.clone(), config));
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(a.listen).await?;
        println!("serving on http://{}", listener.local_addr()?);
        let shutdown = async {
            let ctrl_c = tokio::signal::ctrl_c();
            #[cfg(unix)]
            {
                let mut term = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()).expect("signal handler");
                tokio::select! {
                    _ = ctrl_c => {}
                    _ = term.recv() => {}
                }
            }
            #[cfg(not(unix))]
            let _ = ctrl_c.await;
        };
        api::serve(listener, desk.clone(), shutdown).await?;
        anyhow::Ok(())
    })?;
    drop(rt);
    let desk = Arc::try_unwrap(desk).map_err(|_| anyhow::anyhow!("server still holds the session"))?;
    ws.checkpoint(&desk.into_session())?;
    println!("checkpoint written");
    Ok(())
}

#[derive(Debug, Args)]
pub struct JudgeArgs {
    #[arg(long, env = "JOBCORPUS_SERVER", default_value = "http://127.0.0.1:8080")]
    server: String,
    #[arg(long)]
    judge: String,
    #[arg(long)]
    oracle: OracleSpec,
    #[arg(long)]
    audit: bool,
    #[arg(long)]
    max: Option<usize>,
    /// Keep polling every this many milliseconds until the run stops.
    #[arg(long)]
    poll_ms: Option<u64>,
}

fn cmd_judge(a: JudgeArgs) -> Result<()> {
    let policy = a.oracle.policy()?;
    let client = JudgeClient::new(a.server, a.judge);
    let run = JudgeRun {
        max: a.max,
        poll: a.poll_ms.map(Duration::from_millis),
        audit: a.audit,
    };
    let rt = tokio::runtime::Runtime::new()?;
    let summary = rt.block_on(run_judge(&client, &policy, run))?;
    println!("{} submitted, {} refused as already decided", summary.votes, summary.conflicts);
    Ok(())
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    workspace: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "500,1000")]
    thresholds: Vec<usize>,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn cmd_stats(a: StatsArgs) -> Result<()> {
    let ws = Workspace::open(&a.workspace)?;
    let session = ws.session()?;
    let thresholds = if a.thresholds.is_empty() { DEFAULT_LEAF_THRESHOLDS.to_vec() } else { a.thresholds };
    let stats = corpus_stats(&session.corpus(), &ws.taxonomy()?, &thresholds)?;
    print!("{stats}");
    if let Some(path) = a.json {
        io::write_json(&path, &stats)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    workspace: PathBuf,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    quorum: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the audit table instead of opening a sample.
    #[arg(long)]
    report: bool,
}

fn cmd_audit(a: AuditArgs) -> Result<()> {
    let ws = Workspace::open(&a.workspace)?;
    let mut session = ws.session()?;
    if a.report {
        match session.audit() {
            Some(board) => print!("{}", board.report()),
            None => bail!("no audit has been opened"),
        }
        return Ok(());
    }
    let n = session.open_audit(a.n, a.quorum, a.seed)?;
    ws.checkpoint(&session)?;
    println!("audit opened with {n} samples");
    Ok(())
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    workspace: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_export(a: ExportArgs) -> Result<()> {
    let ws = Workspace::open(&a.workspace)?;
    let mut session = ws.session()?;
    if !session.is_finalized() {
        let report = session.finalize()?;
        ws.checkpoint(&session)?;
        println!("finalized: {}; {} discarded", report.reason, report.discarded.len());
    }
    let n = session.export(&a.out)?;
    println!("{n} labeled documents written to {}", a.out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    categories: usize,
    #[arg(long, default_value_t = 100)]
    docs_per_category: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let corpus = SynthCorpus::generate(SynthConfig {
        categories: a.categories,
        docs_per_category: a.docs_per_category,
        seed: a.seed,
        ..SynthConfig::default()
    })?;
    corpus.write(&a.out)?;
    println!("{} postings written to {}", corpus.documents.len(), a.out.display());
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Assign(a) => cmd_assign(a),
        Command::GridP(a) => cmd_grid_p(a),
        Command::Train(a) => cmd_train(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Init(a) => cmd_init(a),
        Command::Run(a) => cmd_run(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Judge(a) => cmd_judge(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Export(a) => cmd_export(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
