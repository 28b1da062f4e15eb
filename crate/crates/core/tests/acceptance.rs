//! Headless acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fail.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use jobcorpus::classifiers::{
    dual_objective, evaluate, full_alpha, kkt_violations, rbf_kernel, train_svm, train_svm_binary, ClassifierConfig,
    ClassifierKind, FeatureVector, ForestParams, Model, SmoParams, SvmParams,
};
use jobcorpus::embedding::EmbeddingTable;
use jobcorpus::pipeline::{
    corpus_stats, CorpusEntry, Decision, EventLog, Origin, PipelineConfig, Session, Snapshot, StopReason, Verdict,
};
use jobcorpus::similarity::{grid_p_documents, we_cos, JudgementOracle, SimilarityConfig, TfidfModel, WeightedDoc};
use jobcorpus::synth::{SynthConfig, SynthCorpus};
use jobcorpus::taxonomy::{CategoryCode, Taxonomy};
use jobcorpus::text_prep::Preprocessor;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let checks: [(&str, fn() -> Check); 11] = [
        ("we-cos invariants", we_cos_invariants),
        ("one-hot reduction", one_hot_reduction),
        ("smo vs brute force", smo_vs_brute_force),
        ("svm separable blobs", separable_blobs),
        ("kernel checks", kernel_checks),
        ("pipeline end-to-end", pipeline_end_to_end),
        ("grid_p harness", grid_p_harness),
        ("stats rollup", stats_rollup),
        ("verdict aggregation", verdict_aggregation),
        ("replay determinism", replay_determinism),
        ("model round trip", model_round_trip),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({secs:.2}s): {why}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn random_embeddings(rng: &mut ChaCha8Rng, vocab: &[String], dim: usize) -> EmbeddingTable {
    let normal = Normal::new(0.0, 1.0).unwrap();
    EmbeddingTable::from_vectors(
        dim,
        vocab
            .iter()
            .map(|t| (t.clone(), (0..dim).map(|_| normal.sample(rng)).collect::<Vec<f64>>()))
            .collect::<Vec<_>>(),
    )
    .unwrap()
}

fn random_doc(rng: &mut ChaCha8Rng, id: String, vocab: &[String]) -> WeightedDoc {
    let n = rng.random_range(1..=12);
    let weights: Vec<(String, f64)> = vocab
        .choose_multiple(rng, n)
        .map(|t| (t.clone(), rng.random_range(f64::EPSILON..=10.0)))
        .collect();
    WeightedDoc::from_weights(id, weights).unwrap()
}

fn argmax(scores: &[f64]) -> usize {
    scores
        .iter()
        .enumerate()
        .fold(0, |best, (i, &s)| if s > scores[best] { i } else { best })
}

fn we_cos_invariants() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let vocab: Vec<String> = (0..50).map(|i| format!("w{i}")).collect();
    // Low dimension so plenty of token pairs clear the threshold.
    let emb = random_embeddings(&mut rng, &vocab, 3);
    let cfg = SimilarityConfig::default();
    let docs: Vec<WeightedDoc> = (0..1000).map(|i| random_doc(&mut rng, format!("d{i}"), &vocab)).collect();
    let cats: Vec<WeightedDoc> = (0..8).map(|i| random_doc(&mut rng, format!("c{i}"), &vocab)).collect();
    let mut worst: f64 = 0.0;
    for (i, a) in docs.iter().enumerate() {
        let b = &docs[(i + 1) % docs.len()];
        let ab = we_cos(a, b, &emb, &cfg);
        let ba = we_cos(b, a, &emb, &cfg);
        ensure!((ab - ba).abs() <= 1e-12, "asymmetric on {}: {ab} vs {ba}", a.doc_id);
        let aa = we_cos(a, a, &emb, &cfg);
        ensure!((aa - 1.0).abs() <= 1e-9, "self-similarity of {} is {aa}", a.doc_id);
        let s = rng.random_range(0.01..100.0);
        let scaled = a.scaled(s);
        let sb = we_cos(&scaled, b, &emb, &cfg);
        ensure!((sb - ab).abs() <= 1e-9, "scaling {} by {s} moved {ab} to {sb}", a.doc_id);
        worst = worst.max((sb - ab).abs());
        let plain: Vec<f64> = cats.iter().map(|c| we_cos(a, c, &emb, &cfg)).collect();
        let moved: Vec<f64> = cats.iter().map(|c| we_cos(&scaled, c, &emb, &cfg)).collect();
        let (x, y) = (argmax(&plain), argmax(&moved));
        ensure!(x == y || (plain[x] - plain[y]).abs() <= 1e-9, "argmax of {} changed under scaling", a.doc_id);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!("1000 documents, worst scale drift {worst:.1e}, {elapsed:.2?}"))
}

fn one_hot_reduction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let vocab: Vec<String> = (0..30).map(|i| format!("t{i}")).collect();
    let emb = EmbeddingTable::from_vectors(
        vocab.len(),
        vocab.iter().enumerate().map(|(i, t)| {
            let mut v = vec![0.0; vocab.len()];
            v[i] = 1.0;
            (t.clone(), v)
        }),
    )
    .unwrap();
    let corpus: Vec<Vec<String>> = (0..100)
        .map(|_| {
            let n = rng.random_range(3..=15);
            (0..n).map(|_| vocab.choose(&mut rng).unwrap().clone()).collect()
        })
        .collect();
    let model = TfidfModel::fit(&corpus).unwrap();
    // Reference weights: raw counts times smoothed idf, computed from scratch.
    let n = corpus.len() as f64;
    let reference = |tokens: &[String]| -> BTreeMap<String, f64> {
        let mut tf: BTreeMap<String, f64> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t.clone()).or_default() += 1.0;
        }
        tf.into_iter()
            .map(|(t, c)| {
                let df = corpus.iter().filter(|d| d.contains(&t)).count() as f64;
                let idf = ((1.0 + n) / (1.0 + df)).ln() + 1.0;
                (t, c * idf)
            })
            .collect()
    };
    let cfg = SimilarityConfig::with_p(0.8).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..60 {
        let j = (i * 7 + 3) % corpus.len();
        let a = model.weigh("a", &corpus[i]).unwrap();
        let b = model.weigh("b", &corpus[j]).unwrap();
        let got = we_cos(&a, &b, &emb, &cfg);
        let want = common::tfidf_cosine(&reference(&corpus[i]), &reference(&corpus[j]));
        ensure!((got - want).abs() <= 1e-9, "pair ({i},{j}): we_cos {got}, tf-idf cosine {want}");
        worst = worst.max((got - want).abs());
    }
    Ok(format!("60 pairs, max deviation {worst:.1e}"))
}

fn smo_vs_brute_force() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for instance in 0..20 {
        let n = rng.random_range(2..=5);
        let (pts, y) = loop {
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)])
                .collect();
            let y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
            if y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0) {
                break (pts, y);
            }
        };
        let data: Vec<(FeatureVector, i8)> = common::to_sparse(&pts).into_iter().zip(&y).map(|(x, &l)| (x, l as i8)).collect();
        let tight = SmoParams { tol: 1e-6, ..SmoParams::default() };
        let model = train_svm_binary(&data, 0.6, &tight).map_err(|e| e.to_string())?;
        let alpha = full_alpha(&model, &data);
        let smo = dual_objective(&data, &alpha, 0.6);
        let (exact, _) = common::exact_dual_max(&pts, &y, 0.6, 1.0);
        let grid = common::grid_dual_max(&pts, &y, 0.6, 1.0, 20);
        ensure!((smo - exact).abs() <= 1e-6, "instance {instance}: smo {smo}, exhaustive {exact}");
        ensure!(smo >= grid - 1e-9, "instance {instance}: grid {grid} beats smo {smo}");
        worst = worst.max((smo - exact).abs());
        for (m, params) in [(model, tight), (train_svm_binary(&data, 0.6, &SmoParams::default()).unwrap(), SmoParams::default())] {
            let alpha = full_alpha(&m, &data);
            let bad = kkt_violations(&m, &data, &alpha, params.c, 1e-3);
            ensure!(bad.is_empty(), "instance {instance}: KKT violated at {bad:?}");
        }
    }
    Ok(format!("20 instances, max objective gap {worst:.1e}"))
}

fn separable_blobs() -> Check {
    let sigma = 0.2;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut data = Vec::new();
        // Centers 12.5 sigma apart.
        for (cx, code) in [(0.0, "1-01-01-01"), (2.5, "1-01-01-02")] {
            for _ in 0..50 {
                let p = [cx + noise.sample(&mut rng), noise.sample(&mut rng)];
                data.push((FeatureVector::dense(&p), code.parse::<CategoryCode>().unwrap()));
            }
        }
        let m = train_svm(&data, &SvmParams::default()).map_err(|e| e.to_string())?;
        let acc = evaluate(|x| m.predict(x).clone(), &data).map_err(|e| e.to_string())?;
        ensure!(acc == 1.0, "seed {seed}: training accuracy {acc}");
    }
    Ok("10 seeds at training accuracy 1.0".into())
}

fn kernel_checks() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
        let z: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (x, z) = (FeatureVector::dense(&x), FeatureVector::dense(&z));
        let g = rng.random_range(0.01..2.0);
        ensure!(rbf_kernel(&x, &x, g) == 1.0, "K(x,x) != 1");
        ensure!((rbf_kernel(&x, &z, g) - rbf_kernel(&z, &x, g)).abs() <= 1e-15, "asymmetric kernel");
    }
    let k = rbf_kernel(&FeatureVector::dense(&[1.0, 2.0]), &FeatureVector::dense(&[1.0, 1.0]), 0.6);
    ensure!((k - (-0.6f64).exp()).abs() <= 1e-12, "hand case gave {k}");
    Ok(format!("K((1,2),(1,1)) = {k:.15}"))
}

fn oracle_decision(oracle: &mut impl JudgementOracle, sess: &Session, id: u64) -> Decision {
    let t = sess.task(id).unwrap();
    if oracle.judge(&t.doc_id, &t.candidate).unwrap() {
        Decision::Yes
    } else {
        Decision::No
    }
}

fn pipeline_end_to_end() -> Check {
    let start = Instant::now();
    let s = SynthCorpus::generate(SynthConfig::default()).map_err(|e| e.to_string())?;
    ensure!(s.documents.len() == 2000, "synthetic corpus has {} documents", s.documents.len());
    let ids: Vec<&str> = s.documents.iter().map(|d| d.id.as_str()).collect();
    let mut sess = Session::new(s.documents.clone(), s.taxonomy.clone(), PipelineConfig::default()).map_err(|e| e.to_string())?;
    let mut oracle = s.oracle();
    let mut transitions = 0usize;
    sess.module1_run(&s.embeddings).map_err(|e| e.to_string())?;
    loop {
        sess.state().verify_partition(ids.iter().copied()).map_err(|e| e.to_string())?;
        transitions += 1;
        let open: Vec<u64> = sess.open_tasks().collect();
        for id in open {
            let d = oracle_decision(&mut oracle, &sess, id);
            for k in 0..sess.config().quorum {
                sess.record_vote(id, &format!("oracle-{k}"), d).map_err(|e| e.to_string())?;
                sess.state().verify_partition(ids.iter().copied()).map_err(|e| e.to_string())?;
                transitions += 1;
            }
        }
        if sess.should_stop().is_some() {
            break;
        }
        sess.module2_iterate().map_err(|e| e.to_string())?;
    }
    let reason = sess.should_stop().unwrap();
    let rows = sess.state().ledger.clone();
    let remaining: Vec<usize> = rows.iter().map(|r| r.remaining).collect();
    let strict_upto = match reason {
        StopReason::NoExpansion { .. } => remaining.len() - 1,
        StopReason::BelowThreshold { .. } => remaining.len(),
    };
    ensure!(
        remaining[..strict_upto].windows(2).all(|w| w[1] < w[0]) && remaining[0] < 2000,
        "remainder not strictly decreasing: {remaining:?}"
    );
    ensure!(rows.len() == 3, "expected a three-row ledger, got {}", rows.len());
    let labels: Vec<String> = rows.iter().map(|r| r.stage.ledger_label()).collect();
    ensure!(labels == ["WE-cos", "SVM-1st", "SVM-2nd"], "ledger stages {labels:?}");
    let table = sess.state().ledger_table();
    ensure!(
        table.lines().next().unwrap().contains("Correct Classified Data") && table.lines().count() == 4,
        "ledger table shape:\n{table}"
    );
    let report = sess.finalize().map_err(|e| e.to_string())?;
    sess.state().verify_partition(ids.iter().copied()).map_err(|e| e.to_string())?;
    let labeled = &sess.state().labeled;
    let correct = labeled.iter().filter(|(id, e)| s.truth[*id] == e.code).count();
    let accuracy = correct as f64 / labeled.len() as f64;
    ensure!(accuracy >= 0.9, "labeled accuracy {accuracy}");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    print!("{table}");
    Ok(format!(
        "{transitions} transitions checked, stop: {}, {} labeled at accuracy {accuracy:.3}, {} discarded, {elapsed:.2?}",
        report.reason,
        report.labeled,
        report.discarded.len()
    ))
}

fn grid_p_harness() -> Check {
    let s = SynthCorpus::generate(SynthConfig::default()).map_err(|e| e.to_string())?;
    let report = grid_p_documents(&s.documents, &s.taxonomy, &s.embeddings, &[0.4, 0.6, 0.8, 0.9], None, &mut s.oracle())
        .map_err(|e| e.to_string())?;
    ensure!(report.aborted.is_none() && report.rows.len() == 4, "incomplete report:\n{report}");
    let acc = |p: f64| report.rows.iter().find(|r| r.p == p).unwrap().accuracy;
    print!("{report}");
    ensure!(acc(0.8) >= acc(0.4), "p=0.8 scored {} below p=0.4 at {}", acc(0.8), acc(0.4));
    Ok(format!("p=0.8 {:.3} >= p=0.4 {:.3}", acc(0.8), acc(0.4)))
}

fn stats_rollup() -> Check {
    let mut rows = Vec::new();
    for t in 1..=3 {
        rows.push((format!("{t}"), format!("Top {t}"), String::new()));
        rows.push((format!("{t}-01"), format!("Mid {t}"), String::new()));
        rows.push((format!("{t}-01-01"), format!("Minor {t}"), String::new()));
        for l in 1..=3 {
            rows.push((format!("{t}-01-01-0{l}"), format!("Leaf {t}.{l}"), "work".to_string()));
        }
    }
    let tax = Taxonomy::from_rows(rows.iter().map(|r| (r.0.as_str(), r.1.as_str(), r.2.as_str())), &Preprocessor::default())
        .map_err(|e| e.to_string())?;
    let leaves: Vec<CategoryCode> = tax.leaves().map(|n| n.code.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let entries: Vec<CorpusEntry> = (0..20)
        .map(|i| CorpusEntry {
            doc_id: format!("d{i:02}"),
            code: leaves[rng.random_range(0..leaves.len())].clone(),
            origin: Origin::Wecos,
            decided_at: 0,
        })
        .collect();
    let stats = corpus_stats(&entries, &tax, &[2, 4]).map_err(|e| e.to_string())?;
    // Brute force: climb each code's parent chain through the raw rows.
    let parent = |code: &str| code.rfind('-').map(|i| code[..i].to_string());
    let mut expect: BTreeMap<String, usize> = BTreeMap::new();
    for e in &entries {
        let mut c = e.code.to_string();
        while let Some(p) = parent(&c) {
            c = p;
        }
        *expect.entry(c).or_default() += 1;
    }
    for row in &stats.rows {
        let want = expect.get(&row.code.to_string()).copied().unwrap_or(0);
        ensure!(row.count == want, "{}: {} vs brute force {want}", row.code, row.count);
    }
    let sum: f64 = stats.rows.iter().map(|r| r.proportion).sum();
    ensure!((sum - 1.0).abs() <= 1e-9, "proportions sum to {sum}");
    let text = stats.to_string();
    let header = text.lines().next().unwrap_or_default();
    ensure!(
        ["Codes", "Top-level category", "Number of samples", "Proportion"].iter().all(|h| header.contains(h)),
        "header `{header}`"
    );
    print!("{text}");
    Ok(format!("{} top-level rows match", stats.rows.len()))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn verdict_aggregation() -> Check {
    let s = SynthCorpus::generate(SynthConfig {
        categories: 2,
        docs_per_category: 2,
        ..SynthConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let mut sess = Session::new(s.documents.clone(), s.taxonomy.clone(), PipelineConfig::default()).map_err(|e| e.to_string())?;
    sess.module1_run(&s.embeddings).map_err(|e| e.to_string())?;
    let snap = sess.snapshot();
    let perms = permutations(5);
    let mut sessions = 0;
    for pattern in 0u32..32 {
        let votes: Vec<bool> = (0..5).map(|k| pattern & (1 << k) != 0).collect();
        let want = common::majority(&votes);
        let decisions: Vec<Decision> = votes.iter().map(|&v| if v { Decision::Yes } else { Decision::No }).collect();
        for perm in &perms {
            let ordered: Vec<Decision> = perm.iter().map(|&k| decisions[k]).collect();
            ensure!(Verdict::tally(&ordered).accepted() == want, "tally of {ordered:?}");
            let mut sess = Session::restore(
                s.documents.clone(),
                s.taxonomy.clone(),
                PipelineConfig::default(),
                Some(snap.clone()),
                &[],
            )
            .map_err(|e| e.to_string())?;
            for &k in perm {
                sess.record_vote(0, &format!("j{k}"), decisions[k]).map_err(|e| e.to_string())?;
            }
            let task = sess.task(0).unwrap();
            let verdict = task.verdict.as_ref().ok_or("no verdict after a full quorum")?;
            ensure!(verdict.accepted() == want, "pattern {pattern:05b} order {perm:?}");
            ensure!(sess.state().labeled.contains_key(&task.doc_id) == want, "corpus disagrees with verdict");
            sessions += 1;
        }
    }
    Ok(format!("32 patterns x {} orders, {sessions} sessions", perms.len()))
}

/// Drives a session with the oracle until it stops, or until `budget` votes
/// have been cast.
fn drive(s: &SynthCorpus, sess: &mut Session, budget: Option<usize>) -> Result<bool, String> {
    let mut oracle = s.oracle();
    let mut cast = 0;
    loop {
        let Some(id) = sess.open_tasks().next() else {
            if sess.state().ledger.is_empty() && sess.open_stage().is_none() {
                sess.module1_run(&s.embeddings).map_err(|e| e.to_string())?;
            } else if sess.should_stop().is_some() {
                return Ok(true);
            } else {
                sess.module2_iterate().map_err(|e| e.to_string())?;
            }
            continue;
        };
        let d = oracle_decision(&mut oracle, sess, id);
        let judges: Vec<String> = (0..sess.config().quorum).map(|k| format!("j{k}")).collect();
        for j in judges {
            if sess.task(id).unwrap().vote_of(&j).is_some() {
                continue;
            }
            if budget == Some(cast) {
                return Ok(false);
            }
            sess.record_vote(id, &j, d).map_err(|e| e.to_string())?;
            cast += 1;
        }
    }
}

fn export_bytes(sess: &mut Session) -> Result<Vec<u8>, String> {
    sess.finalize().map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("corpus.jsonl");
    sess.export(&path).map_err(|e| e.to_string())?;
    std::fs::read(&path).map_err(|e| e.to_string())
}

fn replay_determinism() -> Check {
    let s = SynthCorpus::generate(SynthConfig::default()).map_err(|e| e.to_string())?;
    let fresh = || Session::new(s.documents.clone(), s.taxonomy.clone(), PipelineConfig::default()).unwrap();
    let mut straight = fresh();
    drive(&s, &mut straight, None)?;
    let expected = export_bytes(&mut straight)?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let log = dir.path().join("events.jsonl");
    let snap = dir.path().join("snapshot.json");
    let mut sess = fresh();
    sess.attach_log(EventLog::open(&log).map_err(|e| e.to_string())?);
    // Snapshot inside module 2, crash a little later with a half-voted task.
    drive(&s, &mut sess, Some(5 * 1500 + 2))?;
    sess.snapshot().save(&snap).map_err(|e| e.to_string())?;
    drive(&s, &mut sess, Some(5 * 300 + 3))?;
    drop(sess);
    let events = jobcorpus::pipeline::read_events(&log).map_err(|e| e.to_string())?;
    for snapshot in [Some(Snapshot::load(&snap).map_err(|e| e.to_string())?), None] {
        let with_snapshot = snapshot.is_some();
        let mut back = Session::restore(s.documents.clone(), s.taxonomy.clone(), PipelineConfig::default(), snapshot, &events)
            .map_err(|e| e.to_string())?;
        drive(&s, &mut back, None)?;
        let got = export_bytes(&mut back)?;
        ensure!(got == expected, "export differs after replay (snapshot: {with_snapshot})");
    }
    Ok(format!("{} logged events, {} export bytes identical", events.len(), expected.len()))
}

fn model_round_trip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let corpus: Vec<(Vec<String>, CategoryCode)> = (0..200)
        .map(|i| {
            let k = i % 4;
            let tokens = (0..rng.random_range(5..10))
                .map(|_| {
                    if rng.random_bool(0.6) {
                        format!("c{k}w{}", rng.random_range(0..5))
                    } else {
                        format!("s{}", rng.random_range(0..20))
                    }
                })
                .collect();
            (tokens, format!("1-01-01-0{}", k + 1).parse().unwrap())
        })
        .collect();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for kind in [
        ClassifierKind::Svm(SvmParams::default()),
        ClassifierKind::Forest(ForestParams {
            num_trees: 30,
            ..ForestParams::default()
        }),
    ] {
        let cfg = ClassifierConfig {
            kind,
            min_count: 1,
            ..ClassifierConfig::default()
        };
        let model = Model::train(&corpus, &cfg).map_err(|e| e.to_string())?;
        let path = dir.path().join("model.json");
        model.save(&path).map_err(|e| e.to_string())?;
        let back = Model::load(&path).map_err(|e| e.to_string())?;
        for (tokens, _) in &corpus {
            let (a, b) = (model.predict_scored(tokens), back.predict_scored(tokens));
            ensure!(a.0 == b.0 && a.1.to_bits() == b.1.to_bits(), "prediction changed after reload");
        }
    }
    Ok("svm and forest identical on 200 vectors".into())
}
