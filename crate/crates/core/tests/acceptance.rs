//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the test harness so the lines always reach stdout. A
//! criterion listed in `KNOWN_RED` may print FAIL without failing the
//! binary; anything else that fails exits non-zero. A known-red criterion
//! that starts passing also fails the binary so the list cannot go stale.
//! Data-dependent criteria print FAIL with a `blocked:` reason when their
//! inputs are missing from the environment.

use asqa_core::dataset::{save_dataset, validate, Dataset, Disambiguation, QaSample, Split};
use asqa_core::generation::Scenario;
use asqa_core::harness::{
    ingest_asqa_file, run_experiment, ExperimentConfig, RepeatTarget, RetrieverSpec, RunRecord,
};
use asqa_core::metrics::{
    corpus_str_em, disambig_f1, dr, lcs_length, normalize, token_f1, NullStub, PerfectStub, Predictions,
};
use asqa_core::retrieval::{
    bm25_score, build_index, retrieve_dense, retrieve_topk, upper_bound_audit, write_corpus, Bm25Retriever,
    DenseVectorStore, Passage, PassageIndex, QueryEmbedder, RandomRetriever, RetrievalError, RetrievalMethod,
    Retriever, RetrieverConfig, UpperBoundReport, DEFAULT_B, DEFAULT_K1,
};
use asqa_core::scalar::Scalar;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

// pinned tolerances and budgets
const DR_DECIMALS_TOL: f64 = 1e-9;
const DR_BUDGET: Duration = Duration::from_secs(1);
const LCS_CASES: usize = 10_000;
const LCS_MAX_LEN: usize = 8;
const LCS_BUDGET: Duration = Duration::from_secs(60);
const F1_TOL: f64 = 1e-9;
const F1_PAIRS: usize = 1_000;
const RETRIEVAL_CORPORA: usize = 100;
const RETRIEVAL_MAX_PASSAGES: usize = 1_000;
const BASELINE_TARGET_WORDS: f64 = 71.6;
const BASELINE_REL_TOL: f64 = 0.15;
const BASELINE_BUDGET: Duration = Duration::from_secs(300);
const FULL_AUDIT_PERCENT: f64 = 14.71;
const FULL_AUDIT_TOL: f64 = 1.0;

/// Criteria allowed to print FAIL, with the reason.
const KNOWN_RED: &[(&str, &str)] = &[(
    "dr_consistency",
    "two reference triples were computed from unrounded inputs; rounding the \
     rounded inputs lands 0.1 above (12.3, 9.4), inputs within +-0.05 reach \
     the reference values",
)];

enum Outcome {
    Pass(String),
    Fail(String),
    /// inputs unavailable; reported as FAIL, tolerated
    Blocked(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().expect("temp dir")
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

// ---------------------------------------------------------------- DR

fn dr_consistency() -> Outcome {
    let started = Instant::now();
    let table = [(30.7, 2.7, 9.1), (33.4, 4.5, 12.2), (31.5, 2.8, 9.3)];
    let mut misses = Vec::new();
    let mut reachable = true;
    for &(rouge, f1, want) in &table {
        let got = round1(dr::<f64>(rouge, f1).expect("non-negative"));
        if (got - want).abs() > DR_DECIMALS_TOL {
            misses.push(format!("dr({rouge}, {f1}) = {got}, expected {want}"));
            // could unrounded inputs have produced the reference value?
            let lo = dr::<f64>(rouge - 0.05, f1 - 0.05).unwrap();
            let hi = dr::<f64>(rouge + 0.05, f1 + 0.05).unwrap();
            reachable &= lo <= want + 0.05 && want - 0.05 <= hi;
        }
    }
    let elapsed = started.elapsed();
    let timing = format!("{:.3} ms", elapsed.as_secs_f64() * 1e3);
    if misses.is_empty() && elapsed < DR_BUDGET {
        Outcome::Pass(format!("3/3 triples match to one decimal in {timing}"))
    } else {
        Outcome::Fail(format!(
            "{}; reference values reachable from rounding intervals: {reachable}; {timing}",
            misses.join("; ")
        ))
    }
}

// ---------------------------------------------------------------- LCS

/// Longest common subsequence by enumerating every subsequence of the
/// shorter input and testing containment in the longer.
fn brute_lcs(a: &[u8], b: &[u8]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut best = 0;
    for mask in 0u32..(1 << short.len()) {
        let len = mask.count_ones() as usize;
        if len <= best {
            continue;
        }
        let mut it = long.iter();
        let is_sub = (0..short.len())
            .filter(|i| mask & (1 << i) != 0)
            .all(|i| it.any(|c| *c == short[i]));
        if is_sub {
            best = len;
        }
    }
    best
}

fn lcs_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1c5);
    let mut mismatches = 0;
    let mut first = None;
    for _ in 0..LCS_CASES {
        // small alphabets make long common subsequences likely
        let alphabet = rng.random_range(1..=5u8);
        let draw = |rng: &mut ChaCha8Rng| {
            let n = rng.random_range(0..=LCS_MAX_LEN);
            (0..n).map(|_| rng.random_range(0..alphabet)).collect::<Vec<u8>>()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        if lcs_length(&a, &b) != brute_lcs(&a, &b) {
            mismatches += 1;
            first.get_or_insert((a, b));
        }
    }
    let elapsed = started.elapsed();
    check(
        mismatches == 0 && elapsed < LCS_BUDGET,
        format!(
            "{mismatches} mismatches over {LCS_CASES} cases (first: {first:?}) in {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- ceiling

fn disamb(q: impl Into<String>, answers: &[&str]) -> Disambiguation {
    Disambiguation {
        disambiguated_question: q.into(),
        accepted_answers: answers.iter().map(|a| a.to_string()).collect(),
    }
}

fn hand_fixture() -> Dataset {
    Dataset {
        split: Split::Dev,
        samples: vec![
            QaSample {
                id: "france-1830".into(),
                question: "Who was the ruler of France in 1830?".into(),
                disambiguations: vec![
                    disamb(
                        "Who was the ruler of France until August 2, 1830?",
                        &["Charles X", "Charles X of France"],
                    ),
                    disamb(
                        "Who was the ruler of France after August 9, 1830?",
                        &["Louis-Philippe I", "Louis Philippe"],
                    ),
                ],
                references: vec!["Charles X ruled until August 1830, then Louis-Philippe I.".into()],
            },
            QaSample {
                id: "bond-actor".into(),
                question: "Who played James Bond?".into(),
                disambiguations: vec![
                    disamb("Who played James Bond first in Eon films?", &["Sean Connery"]),
                    disamb("Who played James Bond in 1969?", &["George Lazenby"]),
                    disamb("Who played James Bond in 2006?", &["Daniel Craig"]),
                ],
                references: vec!["Sean Connery, George Lazenby and Daniel Craig all played Bond.".into()],
            },
        ],
    }
}

const WORDS: &[&str] = &[
    "river", "castle", "piano", "orbit", "lantern", "harbor", "meadow", "falcon", "copper", "violet",
    "summit", "glacier", "ember", "quartz", "tundra", "sparrow", "marble", "canyon", "willow", "comet",
];

fn random_phrase(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let n = rng.random_range(min..=max);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

fn random_fixture(rng: &mut ChaCha8Rng, tag: usize) -> Dataset {
    let samples = (0..rng.random_range(1..=6))
        .map(|s| QaSample {
            id: format!("r{tag}-{s}"),
            question: format!("ambiguous question {tag} {s}?"),
            disambiguations: (0..rng.random_range(1..=5))
                .map(|d| {
                    let aliases: Vec<String> = (0..rng.random_range(1..=3))
                        .map(|_| random_phrase(rng, 1, 3))
                        .collect();
                    let aliases: Vec<&str> = aliases.iter().map(String::as_str).collect();
                    disamb(format!("interpretation {d} of {tag} {s}?"), &aliases)
                })
                .collect(),
            references: vec![random_phrase(rng, 5, 30)],
        })
        .collect();
    Dataset {
        split: Split::Dev,
        samples,
    }
}

fn gold_concatenation(dataset: &Dataset) -> Predictions {
    dataset
        .samples
        .iter()
        .map(|s| {
            let text = s
                .disambiguations
                .iter()
                .map(|d| d.accepted_answers[0].as_str())
                .collect::<Vec<_>>()
                .join("; ");
            (s.id.clone(), text)
        })
        .collect()
}

fn metric_ceiling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xce11);
    let mut fixtures = vec![hand_fixture()];
    fixtures.extend((0..50).map(|t| random_fixture(&mut rng, t)));
    let mut bad = Vec::new();
    for (i, ds) in fixtures.iter().enumerate() {
        assert!(validate(ds).is_loadable(), "fixture {i} is not valid");
        let preds = gold_concatenation(ds);
        let em: f64 = corpus_str_em(&preds, ds).unwrap();
        let perfect: f64 = disambig_f1(&preds, ds, &PerfectStub::from_dataset(ds)).unwrap();
        let null: f64 = disambig_f1(&preds, ds, &NullStub).unwrap();
        if em != 100.0 || perfect != 100.0 || null != 0.0 {
            bad.push(format!(
                "fixture {i}: str_em {em}, perfect {perfect}, null {null}"
            ));
        }
    }
    check(
        bad.is_empty(),
        format!(
            "{} fixtures, exact 100/100/0 on all but {}: {:?}",
            fixtures.len(),
            bad.len(),
            bad
        ),
    )
}

// ---------------------------------------------------------------- token F1

fn token_f1_cases() -> Outcome {
    let hand: f64 = token_f1("Charles X of France", "Charles X");
    let hand_ok = (hand - 2.0 / 3.0).abs() <= F1_TOL && format!("{hand:.3}") == "0.667";
    let mut rng = ChaCha8Rng::seed_from_u64(0xf1);
    let mut worst = 0.0f64;
    for _ in 0..F1_PAIRS {
        let a = random_phrase(&mut rng, 0, 12);
        let b = random_phrase(&mut rng, 0, 12);
        let ab: f64 = token_f1(&a, &b);
        let ba: f64 = token_f1(&b, &a);
        worst = worst.max((ab - ba).abs());
    }
    check(
        hand_ok && worst <= F1_TOL,
        format!("hand case {hand:.6}; max |f(a,b) - f(b,a)| = {worst:e} over {F1_PAIRS} pairs"),
    )
}

// ---------------------------------------------------------------- retrieval

fn random_corpus(rng: &mut ChaCha8Rng, n: usize) -> Vec<Passage> {
    (0..n)
        .map(|i| Passage {
            pid: format!("p{i:04}"),
            title: String::new(),
            body: random_phrase(rng, 1, 25),
        })
        .collect()
}

/// Score every passage with the single-passage scorer, keep positives,
/// sort descending with pid tie-break.
fn exhaustive_bm25<T: Scalar>(index: &PassageIndex, query: &str, k: usize) -> Vec<(String, T)> {
    let terms = normalize(query).into_inner();
    let k1 = T::from_f64_lossy(DEFAULT_K1);
    let b = T::from_f64_lossy(DEFAULT_B);
    let mut all: Vec<(String, T)> = index
        .passages()
        .iter()
        .map(|p| (p.pid.clone(), bm25_score(&terms, &p.pid, index, k1, b).unwrap()))
        .filter(|(_, s)| *s > T::zero())
        .collect();
    all.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then_with(|| x.0.cmp(&y.0)));
    all.truncate(k);
    all
}

struct FixedQuery(Vec<f64>);

impl QueryEmbedder<f64> for FixedQuery {
    fn embed(&self, _query: &str) -> Result<Vec<f64>, RetrievalError> {
        Ok(self.0.clone())
    }

    fn dim(&self) -> usize {
        self.0.len()
    }
}

fn exhaustive_dense(store: &DenseVectorStore<f64>, q: &[f64], k: usize) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = (0..store.len())
        .map(|i| {
            let mut s = 0.0;
            for (x, y) in q.iter().zip(store.vector(i)) {
                s += x * y;
            }
            (store.keys()[i].clone(), s)
        })
        .collect();
    all.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then_with(|| x.0.cmp(&y.0)));
    all.truncate(k);
    all
}

fn retrieval_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb325);
    let mut checked = 0;
    let mut bad = Vec::new();
    for c in 0..RETRIEVAL_CORPORA {
        let n = rng.random_range(1..=RETRIEVAL_MAX_PASSAGES);
        let index = build_index(random_corpus(&mut rng, n)).unwrap();
        for _ in 0..5 {
            let query = random_phrase(&mut rng, 1, 6);
            let k = rng.random_range(1..=20);
            let got: Vec<(String, f64)> = retrieve_topk(&index, &query, k, DEFAULT_K1, DEFAULT_B)
                .ranked
                .into_iter()
                .map(|s| (s.pid, s.score))
                .collect();
            if got != exhaustive_bm25::<f64>(&index, &query, k) {
                bad.push(format!("bm25 corpus {c} query '{query}' k={k}"));
            }
            let got32: Vec<(String, f32)> =
                retrieve_topk(&index, &query, k, DEFAULT_K1 as f32, DEFAULT_B as f32)
                    .ranked
                    .into_iter()
                    .map(|s| (s.pid, s.score))
                    .collect();
            if got32 != exhaustive_bm25::<f32>(&index, &query, k) {
                bad.push(format!("bm25/f32 corpus {c} query '{query}' k={k}"));
            }
            checked += 2;
        }

        // dense: every other corpus uses dyadic coordinates, which sum
        // exactly and so produce genuine ties
        let dim = rng.random_range(1..=16);
        let dyadic = c % 2 == 0;
        let coord = |rng: &mut ChaCha8Rng| {
            if dyadic {
                rng.random_range(-4i32..=4) as f64 / 4.0
            } else {
                rng.random_range(-1.0..1.0)
            }
        };
        let records: Vec<(String, Vec<f64>)> = index
            .passages()
            .iter()
            .map(|p| (p.pid.clone(), (0..dim).map(|_| coord(&mut rng)).collect()))
            .collect();
        let store = DenseVectorStore::from_records(dim, records).unwrap();
        for _ in 0..5 {
            let q: Vec<f64> = (0..dim).map(|_| coord(&mut rng)).collect();
            let k = rng.random_range(1..=20);
            let got: Vec<(String, f64)> = retrieve_dense(&store, "q", k, &FixedQuery(q.clone()))
                .unwrap()
                .ranked
                .into_iter()
                .map(|s| (s.pid, s.score))
                .collect();
            if got != exhaustive_dense(&store, &q, k) {
                bad.push(format!("dense corpus {c} k={k}"));
            }
            checked += 1;
        }
    }
    check(
        bad.is_empty(),
        format!(
            "{checked} rankings over {RETRIEVAL_CORPORA} corpora, {} differ: {:?}",
            bad.len(),
            bad.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

// ---------------------------------------------------------------- audit

/// Ten questions, each with a keyword-dense main passage and a weaker side
/// passage. Answers are planted with varied case and spacing; distractors
/// carry near-miss strings that must not count.
fn planted_audit_fixture() -> (Dataset, Vec<Passage>) {
    let mut samples = Vec::new();
    let mut passages = Vec::new();
    for q in 0..10 {
        let topic = format!("zeta{q}");
        let n_dis = 1 + q % 3;
        let answers: Vec<String> = (0..n_dis).map(|d| format!("Gold Answer {q}{d}")).collect();
        samples.push(QaSample {
            id: format!("q{q}"),
            question: format!("Which {topic} is meant?"),
            disambiguations: answers
                .iter()
                .enumerate()
                .map(|(d, a)| {
                    disamb(
                        format!("Which {topic} in reading {d}?"),
                        &[a.as_str(), "never planted"],
                    )
                })
                .collect(),
            references: vec![format!("About {topic}.")],
        });
        // main passage: the first q % 2 + 1 answers, capped at n_dis
        let planted_main = (q % 2 + 1).min(n_dis);
        let main_answers: Vec<String> = answers[..planted_main]
            .iter()
            .map(|a| a.to_uppercase().replace(' ', "  "))
            .collect();
        passages.push(Passage {
            pid: format!("{topic}-main"),
            title: topic.clone(),
            body: format!("{topic} {topic} {topic} notes: {}.", main_answers.join(" and ")),
        });
        // side passage: the remaining answers
        passages.push(Passage {
            pid: format!("{topic}-side"),
            title: topic.clone(),
            body: format!(
                "{topic} appendix: {} filler filler filler.",
                answers[planted_main..].join(", ")
            ),
        });
    }
    for d in 0..20 {
        passages.push(Passage {
            pid: format!("noise-{d:02}"),
            title: String::new(),
            body: format!("gold answer {d} is not here, gold-answer {d}0 neither"),
        });
    }
    (
        Dataset {
            split: Split::Dev,
            samples,
        },
        passages,
    )
}

/// Independent counter: lowercase, collapse whitespace, substring test.
fn brute_hits(sample: &QaSample, evidence: &[&Passage]) -> usize {
    let fold = |s: &str| s.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ");
    let text = fold(
        &evidence
            .iter()
            .map(|p| p.body.as_str())
            .collect::<Vec<_>>()
            .join(" "),
    );
    sample
        .disambiguations
        .iter()
        .filter(|d| {
            d.accepted_answers.iter().any(|a| {
                let a = fold(a);
                !a.is_empty() && text.contains(&a)
            })
        })
        .count()
}

fn upper_bound_audit_check() -> Outcome {
    let (dataset, passages) = planted_audit_fixture();
    let index = Arc::new(build_index(passages).unwrap());
    let mut retrievers: Vec<Box<dyn Retriever<f64>>> =
        vec![Box::new(Bm25Retriever::new(index.clone(), DEFAULT_K1, DEFAULT_B))];
    retrievers
        .extend((0..3).map(|s| Box::new(RandomRetriever::new(index.clone(), s)) as Box<dyn Retriever<f64>>));

    let mut problems = Vec::new();
    let mut bm25_at1 = Vec::new();
    for retriever in &retrievers {
        for k in 1..=5 {
            let report: UpperBoundReport<f64> = upper_bound_audit(&dataset, retriever.as_ref(), k).unwrap();
            for (row, sample) in report.rows.iter().zip(&dataset.samples) {
                let result = retriever.retrieve(&sample.question, k).unwrap();
                let evidence: Vec<&Passage> = result
                    .ranked
                    .iter()
                    .map(|s| index.passage(&s.pid).unwrap())
                    .collect();
                let want = brute_hits(sample, &evidence);
                if row.sample_id != sample.id || row.hits != want {
                    problems.push(format!(
                        "{}: {} k={k} hits {} vs {want}",
                        report.label, sample.id, row.hits
                    ));
                }
            }
            if report.with_hit.percentage < report.overall.percentage {
                problems.push(format!(
                    "{}: (b) {} < (a) {}",
                    report.label, report.with_hit.percentage, report.overall.percentage
                ));
            }
            if retriever.tag() == "bm25" && k == 1 {
                bm25_at1 = report.rows.iter().map(|r| r.hits).collect();
            }
        }
    }
    // by construction the main passage ranks first and holds min(q % 2 + 1, 1 + q % 3) answers
    let planted: Vec<usize> = (0..10).map(|q| (q % 2 + 1).min(1 + q % 3)).collect();
    if bm25_at1 != planted {
        problems.push(format!("BM25@1 hits {bm25_at1:?}, planted {planted:?}"));
    }
    check(
        problems.is_empty(),
        format!(
            "bm25 + 3 random seeds, k = 1..5, {} mismatches {:?}",
            problems.len(),
            problems
        ),
    )
}

/// Optional full-scale audit. Needs `ASQA_WIKI_INDEX` (saved index) and
/// `ASQA_DATA_DIR`; prints an informational line either way.
fn full_scale_audit() {
    let (Some(index_path), Some(data)) = (std::env::var_os("ASQA_WIKI_INDEX"), data_dir()) else {
        println!("INFO  full_scale_audit: skipped (set ASQA_WIKI_INDEX and ASQA_DATA_DIR to run)");
        return;
    };
    let result = (|| -> Result<f64, String> {
        let dev = dev_dataset(&data, &tempdir())?;
        let index = PassageIndex::load(index_path).map_err(|e| e.to_string())?;
        let retriever = Bm25Retriever::new(Arc::new(index), DEFAULT_K1, DEFAULT_B);
        let report: UpperBoundReport<f64> =
            upper_bound_audit(&dev, &retriever, 1).map_err(|e| e.to_string())?;
        Ok(report.overall.percentage)
    })();
    match result {
        Ok(p) => {
            let ok = (p - FULL_AUDIT_PERCENT).abs() <= FULL_AUDIT_TOL;
            println!(
                "INFO  full_scale_audit: BM25@1 overall {p:.2}% (expected {FULL_AUDIT_PERCENT} +- {FULL_AUDIT_TOL}): {}",
                if ok { "within" } else { "outside" }
            );
        }
        Err(e) => println!("INFO  full_scale_audit: error {e}"),
    }
}

// ---------------------------------------------------------------- baseline

fn data_dir() -> Option<PathBuf> {
    std::env::var_os("ASQA_DATA_DIR").map(PathBuf::from)
}

/// Canonical `<split>.jsonl`, or ingested from the published `ASQA.json`.
fn split_file(data: &Path, split: Split, scratch: &Path) -> Result<PathBuf, String> {
    let canonical = data.join(format!("{split}.jsonl"));
    if canonical.exists() {
        return Ok(canonical);
    }
    let published = data.join("ASQA.json");
    if !published.exists() {
        return Err(format!(
            "neither {} nor {} exists",
            canonical.display(),
            published.display()
        ));
    }
    let dest = scratch.join(format!("{split}.jsonl"));
    ingest_asqa_file(&published, split, &dest).map_err(|e| e.to_string())?;
    Ok(dest)
}

fn dev_dataset(data: &Path, scratch: &tempfile::TempDir) -> Result<Dataset, String> {
    let path = split_file(data, Split::Dev, scratch.path())?;
    asqa_core::dataset::load_dataset(path, Split::Dev).map_err(|e| e.to_string())
}

fn question_baseline() -> Outcome {
    let Some(data) = data_dir() else {
        return Outcome::Blocked("set ASQA_DATA_DIR to the dev/train data to run".into());
    };
    let scratch = tempdir();
    let started = Instant::now();
    let paths = split_file(&data, Split::Dev, scratch.path())
        .and_then(|dev| split_file(&data, Split::Train, scratch.path()).map(|train| (dev, train)));
    let (dev, train) = match paths {
        Ok(p) => p,
        Err(e) => return Outcome::Blocked(e),
    };
    let mut config = ExperimentConfig::new(dev, Split::Dev, Scenario::QuestionRepeat, scratch.path());
    config.repeat_target = Some(RepeatTarget::TrainSplit(train));
    let record = match run_experiment::<f64>(&config) {
        Ok(r) => r,
        Err(e) => return Outcome::Fail(format!("run failed: {e}")),
    };
    let elapsed = started.elapsed();
    let length = record
        .evaluation
        .as_ref()
        .map_or(f64::NAN, |e| e.report.answer_length);
    let rel = (length - BASELINE_TARGET_WORDS).abs() / BASELINE_TARGET_WORDS;
    check(
        rel <= BASELINE_REL_TOL && elapsed < BASELINE_BUDGET,
        format!(
            "{} samples, mean length {length:.1} words ({:.1}% off {BASELINE_TARGET_WORDS}) in {:.1} s",
            record.rows.len(),
            rel * 100.0,
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- runs

/// Twenty questions whose answers appear only in their own passage, plus
/// two hundred answer-free distractors. Written to `dir`.
fn planted_run_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9a0d);
    let mut samples = Vec::new();
    let mut passages = Vec::new();
    for q in 0..20 {
        let topic = format!("kappa{q}");
        let answers: Vec<String> = (0..2).map(|d| format!("planted{q}x{d}")).collect();
        samples.push(QaSample {
            id: format!("g{q:02}"),
            question: format!("Who founded {topic}?"),
            disambiguations: answers
                .iter()
                .enumerate()
                .map(|(d, a)| disamb(format!("Who founded {topic} in era {d}?"), &[a.as_str()]))
                .collect(),
            references: vec![format!(
                "{topic} was founded by {} and later {}.",
                answers[0], answers[1]
            )],
        });
        passages.push(Passage {
            pid: format!("rel-{q:02}"),
            title: topic.clone(),
            body: format!("{topic} founded by {} then {}", answers[0], answers[1]),
        });
    }
    for d in 0..200 {
        passages.push(Passage {
            pid: format!("dis-{d:03}"),
            title: String::new(),
            body: random_phrase(&mut rng, 5, 15),
        });
    }
    let dataset = dir.join("dev.jsonl");
    save_dataset(
        &dataset,
        &Dataset {
            split: Split::Dev,
            samples,
        },
    )
    .unwrap();
    let corpus = dir.join("corpus.jsonl");
    write_corpus(&corpus, &passages).unwrap();
    (dataset, corpus)
}

fn retrieval_config(
    dataset: &Path,
    corpus: &Path,
    out: &Path,
    scenario: Scenario,
    method: RetrievalMethod,
    k: usize,
) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(dataset, Split::Dev, scenario, out);
    let mut rc = RetrieverConfig::new(method, k);
    if method == RetrievalMethod::Random {
        rc.seed = Some(7);
    }
    config.retriever = Some(RetrieverSpec {
        config: rc,
        corpus: corpus.to_path_buf(),
        dense_store: None,
        query_vectors: None,
    });
    config
}

fn grounding_direction() -> Outcome {
    let dir = tempdir();
    let (dataset, corpus) = planted_run_fixture(dir.path());
    let mut lines = Vec::new();
    let mut ok = true;
    for k in [1, 3] {
        let open = retrieval_config(
            &dataset,
            &corpus,
            dir.path(),
            Scenario::OpenBook,
            RetrievalMethod::Bm25,
            k,
        );
        let random = retrieval_config(
            &dataset,
            &corpus,
            dir.path(),
            Scenario::RandomRetrieval,
            RetrievalMethod::Random,
            k,
        );
        let run = |c: &ExperimentConfig| run_experiment::<f64>(c).unwrap().evaluation.unwrap().report;
        let (o, r) = (run(&open), run(&random));
        let deterministic = run(&open) == o && run(&random) == r;
        ok &= o.str_em > r.str_em && o.disambig_f1 > r.disambig_f1 && deterministic;
        lines.push(format!(
            "k={k}: open Str-EM {:.1} Dis-F1 {:.1} vs random {:.1} {:.1}, deterministic {deterministic}",
            o.str_em, o.disambig_f1, r.str_em, r.disambig_f1
        ));
    }
    check(ok, lines.join("; "))
}

fn reproducibility() -> Outcome {
    let dir = tempdir();
    let (dataset, corpus) = planted_run_fixture(dir.path());
    let mut configs = vec![
        retrieval_config(
            &dataset,
            &corpus,
            dir.path(),
            Scenario::OpenBook,
            RetrievalMethod::Bm25,
            3,
        ),
        retrieval_config(
            &dataset,
            &corpus,
            dir.path(),
            Scenario::RandomRetrieval,
            RetrievalMethod::Random,
            3,
        ),
        retrieval_config(
            &dataset,
            &corpus,
            dir.path(),
            Scenario::RetrievalOnly,
            RetrievalMethod::Bm25,
            1,
        ),
        ExperimentConfig::new(&dataset, Split::Dev, Scenario::ClosedBook, dir.path()),
    ];
    let mut repeat = ExperimentConfig::new(&dataset, Split::Dev, Scenario::QuestionRepeat, dir.path());
    repeat.repeat_target = Some(RepeatTarget::Words(30));
    configs.push(repeat);

    let mut differing = Vec::new();
    for config in &mut configs {
        let mut bytes = Vec::new();
        for attempt in 0..2 {
            config.output_dir = dir.path().join(format!("attempt-{attempt}"));
            config.max_in_flight = 1 + attempt * 7;
            let record = run_experiment::<f64>(config).unwrap();
            let reloaded = RunRecord::<f64>::load(config.run_dir()).unwrap();
            assert_eq!(reloaded.rows_bytes(), record.rows_bytes());
            bytes.push(record.rows_bytes());
        }
        if bytes[0] != bytes[1] || bytes[0].is_empty() {
            differing.push(config.scenario.to_string());
        }
    }
    check(
        differing.is_empty(),
        format!(
            "{} configurations run twice, rows differ for {:?}",
            configs.len(),
            differing
        ),
    )
}

// ---------------------------------------------------------------- driver

fn main() -> ExitCode {
    let criteria: &[(&str, fn() -> Outcome)] = &[
        ("dr_consistency", dr_consistency),
        ("lcs_oracle", lcs_oracle),
        ("metric_ceiling", metric_ceiling),
        ("token_f1_cases", token_f1_cases),
        ("retrieval_oracle", retrieval_oracle),
        ("upper_bound_audit", upper_bound_audit_check),
        ("question_baseline", question_baseline),
        ("grounding_direction", grounding_direction),
        ("reproducibility", reproducibility),
    ];
    let mut unexpected = 0;
    for &(name, run) in criteria {
        let known = KNOWN_RED.iter().find(|(n, _)| *n == name).map(|(_, why)| *why);
        match (run(), known) {
            (Outcome::Pass(detail), None) => println!("PASS  {name}: {detail}"),
            (Outcome::Pass(detail), Some(_)) => {
                println!("PASS  {name}: {detail} (listed as known-red; remove it from the list)");
                unexpected += 1;
            }
            (Outcome::Fail(detail), Some(why)) => println!("FAIL  {name}: {detail} [known-red: {why}]"),
            (Outcome::Fail(detail), None) => {
                println!("FAIL  {name}: {detail}");
                unexpected += 1;
            }
            (Outcome::Blocked(why), _) => println!("FAIL  {name}: blocked: {why}"),
        }
    }
    full_scale_audit();
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} unexpected result(s)");
        ExitCode::FAILURE
    }
}
