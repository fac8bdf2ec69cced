use super::HarnessError;
use crate::dataset::Split;
use crate::generation::{DecodingConfig, Scenario};
use crate::retrieval::{RetrievalMethod, RetrieverConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

/// Where a backend lives: a named in-process stub or an HTTP endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendSpec {
    Stub(String),
    Url(String),
}

impl BackendSpec {
    /// `http://…`/`https://…` is a URL, anything else a stub name.
    pub fn parse(s: &str) -> Self {
        if s.starts_with("http://") || s.starts_with("https://") {
            BackendSpec::Url(s.to_string())
        } else {
            BackendSpec::Stub(s.to_string())
        }
    }

    pub fn label(&self) -> String {
        match self {
            BackendSpec::Stub(name) => name.clone(),
            BackendSpec::Url(url) => url.clone(),
        }
    }
}

/// Retriever settings plus the files it is built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrieverSpec {
    #[serde(flatten)]
    pub config: RetrieverConfig<f64>,
    /// passage corpus (JSON Lines) or a saved index (`.json`)
    pub corpus: PathBuf,
    /// dense method: passage vector store
    #[serde(default)]
    pub dense_store: Option<PathBuf>,
    /// dense method: query vectors keyed by question text; when absent a
    /// hashing embedder of the store's dimension is used
    #[serde(default)]
    pub query_vectors: Option<PathBuf>,
}

/// Length target for the question-repeat baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepeatTarget {
    Words(usize),
    /// mean reference word count of this train-split file, rounded up
    TrainSplit(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub split: Split,
    pub scenario: Scenario,
    #[serde(default)]
    pub retriever: Option<RetrieverSpec>,
    pub generator: BackendSpec,
    pub oracle: BackendSpec,
    #[serde(default)]
    pub decoding: DecodingConfig,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub run_seed: u64,
    #[serde(default)]
    pub repeat_target: Option<RepeatTarget>,
    /// display name of the system in reports, e.g. `T5-base`
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_in_flight() -> usize {
    4
}

impl ExperimentConfig {
    pub fn new(
        dataset: impl Into<PathBuf>,
        split: Split,
        scenario: Scenario,
        output_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            dataset: dataset.into(),
            split,
            scenario,
            retriever: None,
            generator: BackendSpec::Stub("echo".into()),
            oracle: BackendSpec::Stub("perfect".into()),
            decoding: DecodingConfig::default(),
            output_dir: output_dir.into(),
            run_seed: 0,
            repeat_target: None,
            label: None,
            max_in_flight: default_in_flight(),
        }
    }

    /// Reject illegal scenario/retriever combinations before any work.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        self.decoding
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1".into());
        }
        match (&self.retriever, self.scenario.uses_retriever()) {
            (Some(_), false) => return bad(format!("scenario {} does not take a retriever", self.scenario)),
            (None, true) => return bad(format!("scenario {} requires a retriever", self.scenario)),
            _ => {}
        }
        if let Some(r) = &self.retriever {
            r.config
                .validate()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            let random = r.config.method == RetrievalMethod::Random;
            match self.scenario {
                Scenario::RandomRetrieval if !random => {
                    return bad("random_retrieval requires method=random".into())
                }
                Scenario::OpenBook if random => {
                    return bad("open_book with method=random is the random_retrieval scenario".into())
                }
                _ => {}
            }
            if r.config.method == RetrievalMethod::Dense && r.dense_store.is_none() {
                return bad("dense retrieval requires a dense_store".into());
            }
        }
        if self.scenario == Scenario::QuestionRepeat {
            match &self.repeat_target {
                None => return bad("question_repeat requires a repeat_target".into()),
                Some(RepeatTarget::Words(0)) => return bad("repeat_target must be at least 1 word".into()),
                _ => {}
            }
        }
        Ok(())
    }

    /// Digest of everything that determines the run's output rows.
    pub fn content_hash(&self) -> String {
        let mut snapshot = self.clone();
        snapshot.output_dir = PathBuf::new();
        snapshot.max_in_flight = 0;
        let json = serde_json::to_vec(&snapshot).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir
            .join(format!("run-{}", &self.content_hash()[..16]))
    }

    /// Name for the system in reports and annotation sessions.
    pub fn system_label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        match self.scenario {
            Scenario::QuestionRepeat => "Question".into(),
            Scenario::RetrievalOnly => "retrieval-only".into(),
            _ => self.generator.label(),
        }
    }
}
