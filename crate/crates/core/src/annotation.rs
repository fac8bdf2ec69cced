//! Blind head-to-head comparison sessions.
//!
//! A session pairs the answers of two runs per sample. Which model sits on
//! the left is a coin flip derived from `(pair_id, seed)` and is never sent
//! to assessors: [`PairPayload`] carries only texts. Judgments go to an
//! append-only store that accepts at most one judgment per
//! `(assessor, pair)`; the first write wins. Preference fractions are
//! recomputed from the store on every call.

use crate::dataset::Dataset;
use crate::harness::RunRecord;
use crate::scalar::Scalar;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("unknown session '{0}'")]
    UnknownSession(String),

    #[error("unknown pair {0}")]
    UnknownPair(usize),

    #[error("run '{run}' has no answer for sample '{sample_id}'")]
    MissingAnswer { run: String, sample_id: String },

    #[error("sample '{0}' is not in the dataset")]
    UnknownSample(String),

    #[error("assessor '{assessor_id}' already judged pair {pair_id}")]
    Duplicate { assessor_id: String, pair_id: usize },

    #[error("assessor id is empty")]
    EmptyAssessor,

    #[error("no judgments recorded")]
    NoJudgments,

    #[error("session has no pairs")]
    EmptySession,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed annotation file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Left,
    Right,
    Tie,
}

/// One comparison with its hidden side mapping. Never serialized toward
/// assessors; see [`PairPayload`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonPair {
    pub pair_id: usize,
    pub sample_id: String,
    pub question: String,
    pub answer_left: String,
    pub answer_right: String,
    /// model tag on the left
    pub left_model: String,
    /// model tag on the right
    pub right_model: String,
    pub seed: u64,
}

impl ComparisonPair {
    /// Whether the first-listed model (A) was placed on the left.
    pub fn a_on_left(&self, model_a: &str) -> bool {
        self.left_model == model_a
    }

    pub fn payload(&self, session_id: &str, judged: usize, total: usize) -> PairPayload {
        PairPayload {
            session_id: session_id.to_string(),
            pair_id: self.pair_id,
            question: self.question.clone(),
            answer_left: self.answer_left.clone(),
            answer_right: self.answer_right.clone(),
            progress: Progress { judged, total },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub judged: usize,
    pub total: usize,
}

/// What an assessor sees: texts only, no model identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPayload {
    pub session_id: String,
    pub pair_id: usize,
    pub question: String,
    pub answer_left: String,
    pub answer_right: String,
    pub progress: Progress,
}

/// Reply of the `next` endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum NextPair {
    Pair(PairPayload),
    Done { progress: Progress },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub assessor_id: String,
    pub pair_id: usize,
    pub comp: Verdict,
    pub flue: Verdict,
    pub over: Verdict,
    /// milliseconds since the Unix epoch; stamped on receipt when zero
    #[serde(default)]
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub accepted: bool,
    pub pair_id: usize,
    pub judgments: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Append-only judgment log with a uniqueness check per (assessor, pair).
#[derive(Debug, Default)]
pub struct JudgmentStore {
    inner: Mutex<StoreState>,
}

#[derive(Debug, Default)]
struct StoreState {
    judgments: Vec<Judgment>,
    keys: HashSet<(String, usize)>,
    file: Option<BufWriter<File>>,
}

impl JudgmentStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Open (or create) a JSON Lines log and replay it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, AnnotationError> {
        let path = path.as_ref();
        let mut state = StoreState::default();
        if path.exists() {
            for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let j: Judgment = serde_json::from_str(&line).map_err(|e| {
                    AnnotationError::Format(format!("{} line {}: {e}", path.display(), i + 1))
                })?;
                if state.keys.insert((j.assessor_id.clone(), j.pair_id)) {
                    state.judgments.push(j);
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        state.file = Some(BufWriter::new(file));
        Ok(Self {
            inner: Mutex::new(state),
        })
    }

    /// Check and append under one lock: concurrent duplicates store once.
    pub fn append(&self, judgment: Judgment) -> Result<usize, AnnotationError> {
        let mut state = self.inner.lock().expect("judgment store poisoned");
        let key = (judgment.assessor_id.clone(), judgment.pair_id);
        if state.keys.contains(&key) {
            return Err(AnnotationError::Duplicate {
                assessor_id: key.0,
                pair_id: key.1,
            });
        }
        if let Some(f) = state.file.as_mut() {
            serde_json::to_writer(&mut *f, &judgment).map_err(std::io::Error::from)?;
            f.write_all(b"\n")?;
            f.flush()?;
        }
        state.keys.insert(key);
        state.judgments.push(judgment);
        Ok(state.judgments.len())
    }

    /// Consistent copy of everything stored so far.
    pub fn snapshot(&self) -> Vec<Judgment> {
        self.inner
            .lock()
            .expect("judgment store poisoned")
            .judgments
            .clone()
    }

    pub fn len(&self) -> usize {
        self.inner
            .lock()
            .expect("judgment store poisoned")
            .judgments
            .len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn judged_by(&self, assessor_id: &str) -> HashSet<usize> {
        let state = self.inner.lock().expect("judgment store poisoned");
        state
            .judgments
            .iter()
            .filter(|j| j.assessor_id == assessor_id)
            .map(|j| j.pair_id)
            .collect()
    }
}

/// Per-metric preference for model A.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPreference<T> {
    pub wins: u64,
    pub ties: u64,
    pub losses: u64,
    pub judgments: u64,
    /// (wins + ties / 2) / judgments
    pub fraction: T,
}

impl<T: Scalar> MetricPreference<T> {
    fn from_counts(wins: u64, ties: u64, losses: u64) -> Self {
        let judgments = wins + ties + losses;
        let exact = Ratio::new(2 * wins + ties, 2 * judgments.max(1));
        Self {
            wins,
            ties,
            losses,
            judgments,
            fraction: T::from_f64_lossy(*exact.numer() as f64) / T::from_f64_lossy(*exact.denom() as f64),
        }
    }

    /// The fraction as an exact rational.
    pub fn exact(&self) -> Ratio<u64> {
        Ratio::new(2 * self.wins + self.ties, 2 * self.judgments.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceSummary<T> {
    pub model_a: String,
    pub model_b: String,
    pub comp: MetricPreference<T>,
    pub flue: MetricPreference<T>,
    pub over: MetricPreference<T>,
}

/// Left-or-right coin for one pair: true puts model A on the left.
pub fn a_on_left(pair_id: usize, seed: u64) -> bool {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((pair_id as u64).to_le_bytes());
    h.finalize()[0] & 1 == 0
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub seed: u64,
    pub model_a: String,
    pub model_b: String,
    pub pairs: Vec<ComparisonPair>,
    store: JudgmentStore,
}

#[derive(Serialize, Deserialize)]
struct SessionFile {
    id: String,
    seed: u64,
    model_a: String,
    model_b: String,
    pairs: Vec<ComparisonPair>,
}

/// Distinct tags for the two runs; falls back to config hashes when both
/// runs carry the same system label.
fn model_tags<T: Scalar>(a: &RunRecord<T>, b: &RunRecord<T>) -> (String, String) {
    let (la, lb) = (a.config.system_label(), b.config.system_label());
    if la != lb {
        return (la, lb);
    }
    let short = |h: &str| h.chars().take(12).collect::<String>();
    (
        format!("{la}#{}", short(&a.config_hash)),
        format!("{lb}#{}", short(&b.config_hash)),
    )
}

/// Build one pair per listed sample; an empty list takes every row of
/// `run_a`. Questions come from `dataset`.
pub fn create_session<T: Scalar>(
    id: impl Into<String>,
    run_a: &RunRecord<T>,
    run_b: &RunRecord<T>,
    dataset: &Dataset,
    sample_ids: &[String],
    seed: u64,
) -> Result<Session, AnnotationError> {
    let (model_a, model_b) = model_tags(run_a, run_b);
    let answers = |run: &RunRecord<T>| -> HashMap<String, String> {
        run.rows
            .iter()
            .map(|r| (r.sample_id.clone(), r.answer.clone()))
            .collect()
    };
    let (ans_a, ans_b) = (answers(run_a), answers(run_b));
    let ids: Vec<String> = if sample_ids.is_empty() {
        run_a.rows.iter().map(|r| r.sample_id.clone()).collect()
    } else {
        sample_ids.to_vec()
    };
    if ids.is_empty() {
        return Err(AnnotationError::EmptySession);
    }
    let mut pairs = Vec::with_capacity(ids.len());
    for (pair_id, sid) in ids.into_iter().enumerate() {
        let missing = |run: &str| AnnotationError::MissingAnswer {
            run: run.to_string(),
            sample_id: sid.clone(),
        };
        let a = ans_a.get(&sid).ok_or_else(|| missing(&model_a))?;
        let b = ans_b.get(&sid).ok_or_else(|| missing(&model_b))?;
        let question = dataset
            .get(&sid)
            .ok_or_else(|| AnnotationError::UnknownSample(sid.clone()))?
            .question
            .clone();
        let left_is_a = a_on_left(pair_id, seed);
        let (answer_left, answer_right, left_model, right_model) = if left_is_a {
            (a.clone(), b.clone(), model_a.clone(), model_b.clone())
        } else {
            (b.clone(), a.clone(), model_b.clone(), model_a.clone())
        };
        pairs.push(ComparisonPair {
            pair_id,
            sample_id: sid,
            question,
            answer_left,
            answer_right,
            left_model,
            right_model,
            seed,
        });
    }
    Ok(Session {
        id: id.into(),
        seed,
        model_a,
        model_b,
        pairs,
        store: JudgmentStore::in_memory(),
    })
}

impl Session {
    /// Persist judgments to `path` from now on, replaying what it holds.
    pub fn with_store(mut self, store: JudgmentStore) -> Self {
        self.store = store;
        self
    }

    pub fn store(&self) -> &JudgmentStore {
        &self.store
    }

    /// Lowest-indexed pair the assessor has not judged, or done.
    pub fn next_pair(&self, assessor_id: &str) -> NextPair {
        let judged = self.store.judged_by(assessor_id);
        let total = self.pairs.len();
        match self.pairs.iter().find(|p| !judged.contains(&p.pair_id)) {
            Some(p) => NextPair::Pair(p.payload(&self.id, judged.len(), total)),
            None => NextPair::Done {
                progress: Progress {
                    judged: judged.len(),
                    total,
                },
            },
        }
    }

    pub fn submit_judgment(&self, mut judgment: Judgment) -> Result<Ack, AnnotationError> {
        if judgment.assessor_id.trim().is_empty() {
            return Err(AnnotationError::EmptyAssessor);
        }
        if judgment.pair_id >= self.pairs.len() {
            return Err(AnnotationError::UnknownPair(judgment.pair_id));
        }
        if judgment.timestamp == 0 {
            judgment.timestamp = now_millis();
        }
        let pair_id = judgment.pair_id;
        let judgments = self.store.append(judgment)?;
        Ok(Ack {
            accepted: true,
            pair_id,
            judgments,
            reason: None,
        })
    }

    /// Preference fractions for model A.
    pub fn summarize<T: Scalar>(&self) -> Result<PreferenceSummary<T>, AnnotationError> {
        self.summarize_for(true)
    }

    /// The same judgments seen from model B.
    pub fn summarize_swapped<T: Scalar>(&self) -> Result<PreferenceSummary<T>, AnnotationError> {
        self.summarize_for(false)
    }

    fn summarize_for<T: Scalar>(&self, first_is_a: bool) -> Result<PreferenceSummary<T>, AnnotationError> {
        let judgments = self.store.snapshot();
        if judgments.is_empty() {
            return Err(AnnotationError::NoJudgments);
        }
        let first = if first_is_a { &self.model_a } else { &self.model_b };
        // [wins, ties, losses] per metric
        let mut counts = [[0u64; 3]; 3];
        for j in &judgments {
            let pair = &self.pairs[j.pair_id];
            let first_left = pair.left_model == *first;
            for (m, v) in [j.comp, j.flue, j.over].into_iter().enumerate() {
                let slot = match (v, first_left) {
                    (Verdict::Tie, _) => 1,
                    (Verdict::Left, true) | (Verdict::Right, false) => 0,
                    _ => 2,
                };
                counts[m][slot] += 1;
            }
        }
        let pref = |c: [u64; 3]| MetricPreference::from_counts(c[0], c[1], c[2]);
        let (a, b) = if first_is_a {
            (&self.model_a, &self.model_b)
        } else {
            (&self.model_b, &self.model_a)
        };
        Ok(PreferenceSummary {
            model_a: a.clone(),
            model_b: b.clone(),
            comp: pref(counts[0]),
            flue: pref(counts[1]),
            over: pref(counts[2]),
        })
    }

    /// Write `session.json`; judgments live in `judgments.jsonl` next to it.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), AnnotationError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let file = SessionFile {
            id: self.id.clone(),
            seed: self.seed,
            model_a: self.model_a.clone(),
            model_b: self.model_b.clone(),
            pairs: self.pairs.clone(),
        };
        let out = BufWriter::new(File::create(dir.join("session.json"))?);
        serde_json::to_writer_pretty(out, &file).map_err(std::io::Error::from)?;
        Ok(())
    }

    /// Load a saved session and reopen its judgment log.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, AnnotationError> {
        let dir = dir.as_ref();
        let f: SessionFile = serde_json::from_reader(BufReader::new(File::open(dir.join("session.json"))?))
            .map_err(|e| AnnotationError::Format(e.to_string()))?;
        Ok(Session {
            id: f.id,
            seed: f.seed,
            model_a: f.model_a,
            model_b: f.model_b,
            pairs: f.pairs,
            store: JudgmentStore::open(dir.join("judgments.jsonl"))?,
        })
    }
}

/// Sessions by id, optionally persisted under a root directory.
#[derive(Debug, Default)]
pub struct SessionRegistry {
    root: Option<PathBuf>,
    sessions: RwLock<HashMap<String, std::sync::Arc<Session>>>,
}

impl SessionRegistry {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Use `root` for persistence and load every session already in it.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, AnnotationError> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        let mut sessions = HashMap::new();
        for entry in std::fs::read_dir(&root)? {
            let dir = entry?.path();
            if dir.join("session.json").exists() {
                let s = Session::load(&dir)?;
                sessions.insert(s.id.clone(), std::sync::Arc::new(s));
            }
        }
        Ok(Self {
            root: Some(root),
            sessions: RwLock::new(sessions),
        })
    }

    /// Register a session; with a root it is saved and its judgments go to
    /// disk. An existing session with the same id is kept.
    pub fn insert(&self, session: Session) -> Result<std::sync::Arc<Session>, AnnotationError> {
        let mut map = self.sessions.write().expect("session registry poisoned");
        if let Some(existing) = map.get(&session.id) {
            return Ok(existing.clone());
        }
        let session = match &self.root {
            Some(root) => {
                let dir = root.join(&session.id);
                session.save(&dir)?;
                let store = JudgmentStore::open(dir.join("judgments.jsonl"))?;
                session.with_store(store)
            }
            None => session,
        };
        let session = std::sync::Arc::new(session);
        map.insert(session.id.clone(), session.clone());
        Ok(session)
    }

    pub fn get(&self, id: &str) -> Result<std::sync::Arc<Session>, AnnotationError> {
        self.sessions
            .read()
            .expect("session registry poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| AnnotationError::UnknownSession(id.to_string()))
    }
}

/// Content-derived session id for a pair of runs, a sample list and a seed.
pub fn session_id(config_hash_a: &str, config_hash_b: &str, sample_ids: &[String], seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(config_hash_a.as_bytes());
    h.update(b"\0");
    h.update(config_hash_b.as_bytes());
    for s in sample_ids {
        h.update(b"\0");
        h.update(s.as_bytes());
    }
    h.update(seed.to_le_bytes());
    format!("s-{}", &hex::encode(h.finalize())[..16])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{QaSample, Split};
    use crate::generation::Scenario;
    use crate::harness::{ExperimentConfig, SampleRow, Timings};
    use std::sync::Arc;

    const TAG_A: &str = "model-alpha-7f3e";
    const TAG_B: &str = "model-beta-91c2";

    fn run(label: &str, n: usize) -> RunRecord<f64> {
        let mut config = ExperimentConfig::new("d", Split::Dev, Scenario::ClosedBook, "o");
        config.label = Some(label.into());
        RunRecord {
            config_hash: config.content_hash(),
            config,
            rows: (0..n)
                .map(|i| SampleRow {
                    sample_id: format!("s{i}"),
                    scenario: Scenario::ClosedBook,
                    retriever_tag: "none".into(),
                    k: 0,
                    decoding: None,
                    prompt_words: 3,
                    answer: format!(
                        "answer {i} by {}",
                        if label == TAG_A { "first" } else { "second" }
                    ),
                    retrieved: Vec::new(),
                    miss: false,
                })
                .collect(),
            failures: Vec::new(),
            evaluation: None,
            timings: Timings::default(),
            tool_version: "t".into(),
        }
    }

    fn dataset(n: usize) -> Dataset {
        Dataset {
            split: Split::Dev,
            samples: (0..n)
                .map(|i| QaSample {
                    id: format!("s{i}"),
                    question: format!("question {i}?"),
                    disambiguations: Vec::new(),
                    references: Vec::new(),
                })
                .collect(),
        }
    }

    fn session(n: usize, seed: u64) -> Session {
        create_session("sess", &run(TAG_A, n), &run(TAG_B, n), &dataset(n), &[], seed).unwrap()
    }

    fn judge(s: &Session, assessor: &str, pair_id: usize, v: [Verdict; 3]) -> Result<Ack, AnnotationError> {
        s.submit_judgment(Judgment {
            assessor_id: assessor.into(),
            pair_id,
            comp: v[0],
            flue: v[1],
            over: v[2],
            timestamp: 1,
        })
    }

    /// The verdict that favors model A on this pair.
    fn a_side(s: &Session, pair_id: usize) -> Verdict {
        if s.pairs[pair_id].a_on_left(&s.model_a) {
            Verdict::Left
        } else {
            Verdict::Right
        }
    }

    #[test]
    fn four_samples_four_pairs() {
        let s = session(4, 1);
        assert_eq!(s.pairs.len(), 4);
        for p in &s.pairs {
            assert!(!p.answer_left.is_empty() && !p.answer_right.is_empty());
            assert_ne!(p.answer_left, p.answer_right);
        }
    }

    #[test]
    fn side_assignment_is_deterministic() {
        let a: Vec<_> = session(20, 9)
            .pairs
            .iter()
            .map(|p| p.left_model.clone())
            .collect();
        let b: Vec<_> = session(20, 9)
            .pairs
            .iter()
            .map(|p| p.left_model.clone())
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn left_counts_within_three_sigma() {
        // 100 pairs: mean 50, sigma 5
        for seed in 0..20 {
            let s = session(100, seed);
            let left_a = s.pairs.iter().filter(|p| p.a_on_left(TAG_A)).count();
            assert!((35..=65).contains(&left_a), "seed {seed}: {left_a}");
        }
    }

    #[test]
    fn payloads_never_contain_model_tags() {
        let s = session(100, 3);
        for p in &s.pairs {
            let json = serde_json::to_string(&NextPair::Pair(p.payload(&s.id, 0, 100))).unwrap();
            assert!(!json.contains(TAG_A) && !json.contains(TAG_B), "{json}");
        }
        let ack = judge(&s, "x", 0, [Verdict::Tie; 3]).unwrap();
        let json = serde_json::to_string(&ack).unwrap();
        assert!(!json.contains(TAG_A) && !json.contains(TAG_B));
    }

    #[test]
    fn missing_answer_names_sample() {
        let mut b = run(TAG_B, 3);
        b.rows.remove(1);
        let err = create_session("x", &run(TAG_A, 3), &b, &dataset(3), &[], 0).unwrap_err();
        assert!(matches!(err, AnnotationError::MissingAnswer { ref sample_id, .. } if sample_id == "s1"));
    }

    #[test]
    fn next_pair_walks_in_order_then_done() {
        let s = session(2, 0);
        let NextPair::Pair(p) = s.next_pair("ann") else {
            panic!()
        };
        assert_eq!(p.pair_id, 0);
        judge(&s, "ann", 0, [Verdict::Left; 3]).unwrap();
        let NextPair::Pair(p) = s.next_pair("ann") else {
            panic!()
        };
        assert_eq!((p.pair_id, p.progress.judged), (1, 1));
        judge(&s, "ann", 1, [Verdict::Left; 3]).unwrap();
        assert!(matches!(s.next_pair("ann"), NextPair::Done { progress } if progress.judged == 2));
        assert!(matches!(s.next_pair("bob"), NextPair::Pair(ref p) if p.pair_id == 0));
    }

    #[test]
    fn duplicate_rejected_store_unchanged() {
        let s = session(2, 0);
        judge(&s, "ann", 0, [Verdict::Left; 3]).unwrap();
        let before = s.store().snapshot();
        assert!(matches!(
            judge(&s, "ann", 0, [Verdict::Right; 3]),
            Err(AnnotationError::Duplicate { .. })
        ));
        assert_eq!(s.store().snapshot(), before);
        assert!(matches!(
            judge(&s, "ann", 7, [Verdict::Tie; 3]),
            Err(AnnotationError::UnknownPair(7))
        ));
    }

    #[test]
    fn missing_verdict_field_is_rejected_on_parse() {
        let r: Result<Judgment, _> =
            serde_json::from_str(r#"{"assessor_id":"a","pair_id":0,"comp":"left","flue":"tie"}"#);
        assert!(r.is_err());
    }

    #[test]
    fn concurrent_duplicates_store_once() {
        for round in 0..50 {
            let s = Arc::new(session(1, round));
            let handles: Vec<_> = (0..2)
                .map(|w| {
                    let s = s.clone();
                    std::thread::spawn(move || {
                        let v = if w == 0 { Verdict::Left } else { Verdict::Right };
                        judge(&s, "same", 0, [v; 3]).is_ok()
                    })
                })
                .collect();
            let ok = handles
                .into_iter()
                .map(|h| h.join().unwrap())
                .filter(|&b| b)
                .count();
            assert_eq!(ok, 1);
            assert_eq!(s.store().len(), 1);
        }
    }

    #[test]
    fn win_and_tie_is_three_quarters() {
        let s = session(2, 5);
        let w = a_side(&s, 0);
        judge(&s, "ann", 0, [w, w, w]).unwrap();
        judge(&s, "ann", 1, [Verdict::Tie; 3]).unwrap();
        let sum = s.summarize::<f64>().unwrap();
        assert_eq!(sum.comp.fraction, 0.75);
        assert_eq!(sum.comp.exact(), Ratio::new(3, 4));
        assert_eq!(sum.model_a, TAG_A);
    }

    #[test]
    fn five_of_eight_and_all_ties() {
        let s = session(8, 11);
        for i in 0..8 {
            let v = if i < 5 {
                a_side(&s, i)
            } else if a_side(&s, i) == Verdict::Left {
                Verdict::Right
            } else {
                Verdict::Left
            };
            judge(&s, "ann", i, [v, Verdict::Tie, v]).unwrap();
        }
        let sum = s.summarize::<f64>().unwrap();
        assert_eq!(sum.comp.fraction, 0.625);
        assert_eq!(sum.flue.fraction, 0.5);
        assert_eq!(sum.over.judgments, 8);
    }

    #[test]
    fn complementarity_is_exact() {
        let s = session(30, 2);
        let verdicts = [Verdict::Left, Verdict::Right, Verdict::Tie];
        for i in 0..30 {
            let v = [verdicts[i % 3], verdicts[(i / 3) % 3], verdicts[(i * 7) % 3]];
            judge(&s, "ann", i, v).unwrap();
            judge(&s, "bob", i, [v[2], v[0], v[1]]).unwrap();
        }
        let ab = s.summarize::<f64>().unwrap();
        let ba = s.summarize_swapped::<f64>().unwrap();
        assert_eq!(ba.model_a, TAG_B);
        for (x, y) in [(ab.comp, ba.comp), (ab.flue, ba.flue), (ab.over, ba.over)] {
            assert_eq!(x.exact() + y.exact(), Ratio::from_integer(1));
            assert!((x.fraction + y.fraction - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn summarize_needs_judgments_and_is_idempotent() {
        let s = session(3, 0);
        assert!(matches!(s.summarize::<f64>(), Err(AnnotationError::NoJudgments)));
        judge(&s, "ann", 2, [Verdict::Left, Verdict::Tie, Verdict::Right]).unwrap();
        judge(&s, "ann", 0, [Verdict::Right, Verdict::Tie, Verdict::Left]).unwrap();
        assert_eq!(s.summarize::<f64>().unwrap(), s.summarize::<f64>().unwrap());
    }

    #[test]
    fn registry_persists_sessions_and_judgments() {
        let dir = tempfile::tempdir().unwrap();
        {
            let reg = SessionRegistry::open(dir.path()).unwrap();
            let s = reg.insert(session(3, 4)).unwrap();
            judge(&s, "ann", 1, [Verdict::Left; 3]).unwrap();
        }
        let reg = SessionRegistry::open(dir.path()).unwrap();
        let s = reg.get("sess").unwrap();
        assert_eq!(s.store().len(), 1);
        assert_eq!(s.pairs, session(3, 4).pairs);
        assert!(matches!(
            judge(&s, "ann", 1, [Verdict::Right; 3]),
            Err(AnnotationError::Duplicate { .. })
        ));
        assert!(matches!(reg.get("nope"), Err(AnnotationError::UnknownSession(_))));
    }
}
