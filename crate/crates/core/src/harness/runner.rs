use super::record::{FailureEntry, RunRecord, SampleRow, Timings};
use super::{BackendSpec, ExperimentConfig, HarnessError, RepeatTarget, RetrieverSpec, TOOL_VERSION};
use crate::dataset::{load_dataset, stats, Dataset, QaSample, Split};
use crate::generation::{
    build_prompt, generate, prompt_words, question_repeat_baseline, retrieval_only_answer, CannedStub,
    EchoStub, GenerationResponse, GeneratorBackend, Provenance, Scenario,
};
use crate::metrics::{evaluate, CachedOracle, CannedOracle, MetricError, NullStub, PerfectStub, QaOracle};
use crate::retrieval::{
    build_index, read_corpus, Bm25Retriever, DenseRetriever, DenseVectorStore, HashingEmbedder, PassageIndex,
    PrecomputedEmbedder, QueryEmbedder, RandomRetriever, RetrievalMethod, Retriever,
};
use crate::scalar::Scalar;
use rayon::prelude::*;
use std::collections::HashMap;
use std::fmt::Display;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

/// The two external models a run talks to.
pub struct Backends {
    pub generator: Box<dyn GeneratorBackend>,
    pub oracle: Box<dyn QaOracle>,
}

impl Backends {
    /// Resolve stub names from the config. URL backends are rejected here;
    /// callers with an HTTP client build [`Backends`] themselves.
    pub fn stubs(config: &ExperimentConfig, dataset: &Dataset) -> Result<Self, HarnessError> {
        let generator = match &config.generator {
            BackendSpec::Stub(name) => stub_generator(name)?,
            BackendSpec::Url(url) => {
                return Err(HarnessError::Config(format!(
                    "generator {url} needs an HTTP client; only stubs resolve in-process"
                )))
            }
        };
        let oracle = match &config.oracle {
            BackendSpec::Stub(name) => stub_oracle(name, dataset)?,
            BackendSpec::Url(url) => {
                return Err(HarnessError::Config(format!(
                    "oracle {url} needs an HTTP client; only stubs resolve in-process"
                )))
            }
        };
        Ok(Self { generator, oracle })
    }
}

/// `echo` or `canned:<path>` (JSON Lines of `{request_id, text}`).
pub fn stub_generator(name: &str) -> Result<Box<dyn GeneratorBackend>, HarnessError> {
    match name.split_once(':') {
        None if name == "echo" => Ok(Box::new(EchoStub)),
        Some(("canned", path)) => Ok(Box::new(load_canned_generator(path)?)),
        _ => Err(HarnessError::Config(format!(
            "unknown generator stub '{name}' (expected echo or canned:<path>)"
        ))),
    }
}

pub fn load_canned_generator(path: impl AsRef<Path>) -> Result<CannedStub, HarnessError> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut answers = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: GenerationResponse = serde_json::from_str(&line)
            .map_err(|e| HarnessError::Config(format!("{} line {}: {e}", path.display(), i + 1)))?;
        answers.push((r.request_id, r.text));
    }
    Ok(CannedStub::new(answers))
}

/// `perfect`, `null` or `canned:<path>` (a JSON object question → answer).
pub fn stub_oracle(name: &str, dataset: &Dataset) -> Result<Box<dyn QaOracle>, HarnessError> {
    match name.split_once(':') {
        None if name == "perfect" => Ok(Box::new(PerfectStub::from_dataset(dataset))),
        None if name == "null" => Ok(Box::new(NullStub)),
        Some(("canned", path)) => {
            let answers: HashMap<String, String> = serde_json::from_reader(BufReader::new(File::open(path)?))
                .map_err(|e| HarnessError::Config(format!("{path}: {e}")))?;
            Ok(Box::new(CannedOracle { answers }))
        }
        _ => Err(HarnessError::Config(format!(
            "unknown oracle stub '{name}' (expected perfect, null or canned:<path>)"
        ))),
    }
}

fn load_index(path: &Path) -> Result<PassageIndex, HarnessError> {
    if path.extension().is_some_and(|e| e == "json") {
        Ok(PassageIndex::load(path)?)
    } else {
        Ok(build_index(read_corpus(path)?)?)
    }
}

pub fn build_retriever<T: Scalar>(spec: &RetrieverSpec) -> Result<Box<dyn Retriever<T>>, HarnessError> {
    spec.config
        .validate()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let index = Arc::new(load_index(&spec.corpus)?);
    let c = &spec.config;
    Ok(match c.method {
        RetrievalMethod::Bm25 => Box::new(Bm25Retriever::new(
            index,
            T::from_f64_lossy(c.k1),
            T::from_f64_lossy(c.b),
        )),
        RetrievalMethod::Random => Box::new(RandomRetriever::new(index, c.seed.unwrap_or_default())),
        RetrievalMethod::Dense => {
            let store_path = spec
                .dense_store
                .as_ref()
                .ok_or_else(|| HarnessError::Config("dense retrieval requires a dense_store".into()))?;
            let store = DenseVectorStore::<T>::load(store_path)?;
            let embedder: Box<dyn QueryEmbedder<T>> = match &spec.query_vectors {
                Some(p) => Box::new(PrecomputedEmbedder::from_store(&DenseVectorStore::<T>::load(p)?)),
                None => Box::new(HashingEmbedder { dim: store.dim() }),
            };
            Box::new(DenseRetriever::new(index, store, embedder)?)
        }
    })
}

/// Word target for the question-repeat baseline.
pub fn repeat_target_words(target: &RepeatTarget) -> Result<usize, HarnessError> {
    match target {
        RepeatTarget::Words(0) => Err(HarnessError::Config(
            "repeat_target must be at least 1 word".into(),
        )),
        RepeatTarget::Words(n) => Ok(*n),
        RepeatTarget::TrainSplit(path) => {
            let train = load_dataset(path, Split::Train)?;
            let mean = stats::<f64>(&train).mean_reference_length_words;
            Ok((mean.ceil() as usize).max(1))
        }
    }
}

/// Load the dataset, resolve stub backends and run.
pub fn run_experiment<T: Scalar>(config: &ExperimentConfig) -> Result<RunRecord<T>, HarnessError> {
    config.validate()?;
    let dataset = load_dataset(&config.dataset, config.split)?;
    let backends = Backends::stubs(config, &dataset)?;
    run_experiment_with(config, &dataset, &backends)
}

struct Pipeline<'a, T: Scalar> {
    config: &'a ExperimentConfig,
    retriever: Option<Box<dyn Retriever<T>>>,
    k: usize,
    target_words: usize,
    generator: &'a dyn GeneratorBackend,
}

impl<T: Scalar> Pipeline<'_, T> {
    fn answer(&self, s: &QaSample) -> Result<SampleRow, FailureEntry> {
        let fail = |stage: &str, e: &dyn Display| FailureEntry {
            sample_id: Some(s.id.clone()),
            stage: stage.to_string(),
            error: e.to_string(),
        };
        let (passages, retrieved, tag) = match &self.retriever {
            Some(r) => {
                let res = r
                    .retrieve(&s.question, self.k)
                    .map_err(|e| fail("retrieve", &e))?;
                (r.passages_for(&res), res.pids(), r.tag())
            }
            None => (Vec::new(), Vec::new(), "none".to_string()),
        };
        let prompt = build_prompt(&s.question, &passages);
        let scenario = self.config.scenario;
        let miss = self.retriever.is_some() && retrieved.is_empty();
        let (answer, decoding) = match scenario {
            Scenario::QuestionRepeat => {
                let a = question_repeat_baseline(&s.id, &s.question, self.target_words)
                    .map_err(|e| fail("answer", &e))?;
                (a.text, None)
            }
            Scenario::RetrievalOnly if miss => (String::new(), None),
            Scenario::RetrievalOnly => {
                let a = retrieval_only_answer(&s.id, &passages, &tag).map_err(|e| fail("answer", &e))?;
                (a.text, None)
            }
            Scenario::ClosedBook | Scenario::OpenBook | Scenario::RandomRetrieval => {
                let provenance = Provenance {
                    scenario,
                    retriever_tag: tag.clone(),
                    k: self.k,
                };
                let a = generate(self.generator, &s.id, &prompt, &self.config.decoding, provenance)
                    .map_err(|e| fail("generate", &e))?;
                (a.text, a.decoding)
            }
        };
        Ok(SampleRow {
            sample_id: s.id.clone(),
            scenario,
            retriever_tag: tag,
            k: self.k,
            decoding,
            prompt_words: prompt_words(&prompt),
            answer,
            retrieved,
            miss,
        })
    }
}

/// Run retrieve → prompt → generate → metrics over every sample and persist
/// the record under the config's run directory before returning.
///
/// Samples run in parallel on at most `max_in_flight` threads; rows keep
/// dataset order. Any per-sample failure persists a partial record with a
/// failure manifest and returns [`HarnessError::PartialRun`].
pub fn run_experiment_with<T: Scalar>(
    config: &ExperimentConfig,
    dataset: &Dataset,
    backends: &Backends,
) -> Result<RunRecord<T>, HarnessError> {
    config.validate()?;
    let started = Instant::now();
    let target_words = match (&config.scenario, &config.repeat_target) {
        (Scenario::QuestionRepeat, Some(t)) => repeat_target_words(t)?,
        _ => 0,
    };
    let pipeline = Pipeline::<T> {
        config,
        retriever: config.retriever.as_ref().map(build_retriever::<T>).transpose()?,
        k: config.retriever.as_ref().map_or(0, |r| r.config.k),
        target_words,
        generator: backends.generator.as_ref(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.max_in_flight)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;

    let outcomes: Vec<Result<SampleRow, FailureEntry>> =
        pool.install(|| dataset.samples.par_iter().map(|s| pipeline.answer(s)).collect());
    let answer_ms = started.elapsed().as_millis() as u64;

    let mut record = RunRecord {
        config: config.clone(),
        config_hash: config.content_hash(),
        rows: Vec::with_capacity(outcomes.len()),
        failures: Vec::new(),
        evaluation: None,
        timings: Timings::default(),
        tool_version: TOOL_VERSION.to_string(),
    };
    for o in outcomes {
        match o {
            Ok(row) => record.rows.push(row),
            Err(f) => record.failures.push(f),
        }
    }
    let path = RunRecord::<T>::path_in(&config.run_dir());

    if record.failures.is_empty() {
        let metrics_started = Instant::now();
        let oracle = CachedOracle::new(backends.oracle.as_ref());
        let evaluated = pool.install(|| evaluate::<T>(&record.predictions(), dataset, &oracle));
        match evaluated {
            Ok(ev) => record.evaluation = Some(ev),
            Err(MetricError::Oracle { sample_id, source }) => record.failures.push(FailureEntry {
                sample_id: Some(sample_id),
                stage: "metrics".into(),
                error: source.to_string(),
            }),
            Err(e) => return Err(e.into()),
        }
        log::info!(
            "oracle: {} distinct calls, {} cached",
            oracle.inner_calls(),
            oracle.cached_entries()
        );
        record.timings.metrics_ms = metrics_started.elapsed().as_millis() as u64;
    }
    record.timings.answer_ms = answer_ms;
    record.timings.total_ms = started.elapsed().as_millis() as u64;
    record.save(&path)?;

    if let Some(first) = record.failures.first() {
        return Err(HarnessError::PartialRun {
            record_path: path,
            failures: record.failures.len(),
            first: format!(
                "{} [{}]: {}",
                first.sample_id.as_deref().unwrap_or("-"),
                first.stage,
                first.error
            ),
        });
    }
    Ok(record)
}
