//! `asqa-bench`: command-line front end of the evaluation workbench.
//!
//! Exit codes: 0 success, 1 validation or config error, 2 backend failure.

use asqa_core::annotation::SessionRegistry;
use asqa_core::dataset::{load_dataset, Split};
use asqa_core::generation::{
    emit_training_config, GeneratorBackend, RetryingBackend, Scenario, TrainingProfile,
};
use asqa_core::harness::{
    build_retriever, ingest_asqa_file, render_report, run_experiment_with, stub_generator, stub_oracle,
    BackendSpec, Backends, ExperimentConfig, HarnessError, RepeatTarget, ReportFormat, RetrieverSpec,
    RunRecord,
};
use asqa_core::metrics::{QaOracle, RetryingOracle};
use asqa_core::retrieval::{
    build_index, read_corpus, render_upper_bound_table, upper_bound_audit, HashingEmbedder, RetrievalMethod,
    RetrieverConfig, DEFAULT_B, DEFAULT_K1,
};
use asqa_http::{ClientConfig, HttpGenerator, HttpOracle};
use clap::{Args, Parser, Subcommand};
use std::fmt::Display;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

/// Environment variables that override backend locations.
const GENERATOR_URL_ENV: &str = "ASQA_GENERATOR_URL";
const ORACLE_URL_ENV: &str = "ASQA_ORACLE_URL";

#[derive(Parser)]
#[command(
    name = "asqa-bench",
    version,
    about = "Evaluate long-form answers to ambiguous questions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert the published ASQA JSON into a canonical dataset file
    Ingest {
        #[arg(long)]
        source: PathBuf,
        #[arg(long, default_value = "dev")]
        split: Split,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a BM25 index (and optionally a hashed dense store) from a corpus
    Index {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// also write a hashing-embedder vector store of this dimension
        #[arg(long, requires = "dense_out")]
        dense_dim: Option<usize>,
        #[arg(long)]
        dense_out: Option<PathBuf>,
    },
    /// Retrieve top-k passages for a query or every question of a dataset
    Retrieve {
        #[command(flatten)]
        retriever: RetrieverArgs,
        #[arg(long, conflicts_with = "dataset")]
        query: Option<String>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, default_value = "dev")]
        split: Split,
    },
    /// Count how many disambiguations have an answer in the top-k evidence
    AuditUpperBound {
        #[command(flatten)]
        retriever: RetrieverArgs,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "dev")]
        split: Split,
        /// extra cut-offs; each gets its own table row
        #[arg(long = "also-k")]
        also_k: Vec<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Run one experiment end to end and persist its record
    Run(Box<RunArgs>),
    /// Render run records as a table
    Report {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        #[arg(long, default_value = "markdown")]
        format: ReportFormat,
    },
    /// Serve the blind head-to-head annotation endpoints
    ServeAnnotation {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// sessions and judgments are persisted here
        #[arg(long)]
        sessions_dir: PathBuf,
    },
    /// Emit the fine-tuning config of a model profile as key=value lines
    TrainingConfig {
        #[arg(long)]
        profile: TrainingProfile,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct RetrieverArgs {
    #[arg(long, default_value = "bm25")]
    method: RetrievalMethod,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_K1)]
    k1: f64,
    #[arg(long, default_value_t = DEFAULT_B)]
    b: f64,
    /// passage corpus (JSON Lines) or saved index (.json)
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    dense_store: Option<PathBuf>,
    #[arg(long)]
    query_vectors: Option<PathBuf>,
}

impl RetrieverArgs {
    fn spec(&self) -> RetrieverSpec {
        RetrieverSpec {
            config: RetrieverConfig {
                method: self.method,
                k: self.k,
                seed: self.seed,
                k1: self.k1,
                b: self.b,
            },
            corpus: self.corpus.clone(),
            dense_store: self.dense_store.clone(),
            query_vectors: self.query_vectors.clone(),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; flags given alongside override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    split: Option<Split>,
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    method: Option<RetrievalMethod>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    dense_store: Option<PathBuf>,
    #[arg(long)]
    query_vectors: Option<PathBuf>,
    /// stub name (echo, canned:<path>) or http(s) URL
    #[arg(long)]
    generator: Option<String>,
    /// stub name (perfect, null, canned:<path>) or http(s) URL
    #[arg(long)]
    oracle: Option<String>,
    #[arg(long)]
    beams: Option<u32>,
    #[arg(long)]
    max_length_tokens: Option<u32>,
    #[arg(long)]
    no_repeat_ngram: Option<u32>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    run_seed: Option<u64>,
    /// question-repeat target in words
    #[arg(long, conflicts_with = "repeat_train")]
    repeat_words: Option<usize>,
    /// question-repeat target: mean reference length of this train file
    #[arg(long)]
    repeat_train: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    max_in_flight: Option<usize>,
    /// per-request timeout for HTTP backends
    #[arg(long, default_value_t = 60)]
    timeout_secs: u64,
    /// retries after a transport failure
    #[arg(long, default_value_t = 2)]
    retries: usize,
    /// print the report as JSON instead of a table
    #[arg(long)]
    json: bool,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(m: impl Display) -> Self {
        Self {
            code: 1,
            message: m.to_string(),
        }
    }

    fn backend(m: impl Display) -> Self {
        Self {
            code: 2,
            message: m.to_string(),
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Self {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn harness<E: Into<HarnessError>>(e: E) -> Failure {
    Failure::from(e.into())
}

fn env_url(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.trim().is_empty())
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut c = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?
        }
        None => {
            let dataset = args
                .dataset
                .clone()
                .ok_or_else(|| Failure::config("--dataset or --config is required"))?;
            let scenario = args
                .scenario
                .ok_or_else(|| Failure::config("--scenario or --config is required"))?;
            ExperimentConfig::new(
                dataset,
                args.split.unwrap_or(Split::Dev),
                scenario,
                args.output_dir.clone().unwrap_or_else(|| PathBuf::from("runs")),
            )
        }
    };
    if let Some(v) = &args.dataset {
        c.dataset = v.clone();
    }
    if let Some(v) = args.split {
        c.split = v;
    }
    if let Some(v) = args.scenario {
        c.scenario = v;
    }
    if let Some(v) = &args.output_dir {
        c.output_dir = v.clone();
    }
    let touches_retriever = args.method.is_some()
        || args.k.is_some()
        || args.corpus.is_some()
        || args.seed.is_some()
        || args.k1.is_some()
        || args.b.is_some()
        || args.dense_store.is_some()
        || args.query_vectors.is_some();
    if touches_retriever {
        let mut r = c.retriever.take().unwrap_or_else(|| RetrieverSpec {
            config: RetrieverConfig::new(RetrievalMethod::Bm25, 1),
            corpus: PathBuf::new(),
            dense_store: None,
            query_vectors: None,
        });
        if let Some(v) = args.method {
            r.config.method = v;
        }
        if let Some(v) = args.k {
            r.config.k = v;
        }
        if args.seed.is_some() {
            r.config.seed = args.seed;
        }
        if let Some(v) = args.k1 {
            r.config.k1 = v;
        }
        if let Some(v) = args.b {
            r.config.b = v;
        }
        if let Some(v) = &args.corpus {
            r.corpus = v.clone();
        }
        if args.dense_store.is_some() {
            r.dense_store = args.dense_store.clone();
        }
        if args.query_vectors.is_some() {
            r.query_vectors = args.query_vectors.clone();
        }
        if r.corpus.as_os_str().is_empty() {
            return Err(Failure::config("retriever settings need --corpus"));
        }
        c.retriever = Some(r);
    }
    if let Some(v) = &args.generator {
        c.generator = BackendSpec::parse(v);
    }
    if let Some(v) = &args.oracle {
        c.oracle = BackendSpec::parse(v);
    }
    if let Some(url) = env_url(GENERATOR_URL_ENV) {
        c.generator = BackendSpec::Url(url);
    }
    if let Some(url) = env_url(ORACLE_URL_ENV) {
        c.oracle = BackendSpec::Url(url);
    }
    let d = &mut c.decoding;
    if let Some(v) = args.beams {
        d.beams = v;
    }
    if let Some(v) = args.max_length_tokens {
        d.max_length_tokens = v;
    }
    if let Some(v) = args.no_repeat_ngram {
        d.no_repeat_ngram = v;
    }
    if let Some(v) = args.run_seed {
        c.run_seed = v;
    }
    if let Some(v) = args.repeat_words {
        c.repeat_target = Some(RepeatTarget::Words(v));
    }
    if let Some(v) = &args.repeat_train {
        c.repeat_target = Some(RepeatTarget::TrainSplit(v.clone()));
    }
    if args.label.is_some() {
        c.label = args.label.clone();
    }
    if let Some(v) = args.max_in_flight {
        c.max_in_flight = v;
    }
    Ok(c)
}

fn backends(
    config: &ExperimentConfig,
    args: &RunArgs,
    dataset: &asqa_core::dataset::Dataset,
) -> Result<Backends, Failure> {
    let client = ClientConfig {
        timeout: Duration::from_secs(args.timeout_secs),
    };
    let generator: Box<dyn GeneratorBackend> = match &config.generator {
        BackendSpec::Stub(name) => stub_generator(name)?,
        BackendSpec::Url(url) => Box::new(RetryingBackend::new(
            HttpGenerator::new(url.clone(), client).map_err(Failure::backend)?,
            args.retries,
        )),
    };
    let oracle: Box<dyn QaOracle> = match &config.oracle {
        BackendSpec::Stub(name) => stub_oracle(name, dataset)?,
        BackendSpec::Url(url) => Box::new(RetryingOracle::new(
            HttpOracle::new(url.clone(), client).map_err(Failure::backend)?,
            args.retries,
        )),
    };
    Ok(Backends { generator, oracle })
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let config = build_config(args)?;
    config.validate()?;
    let dataset = load_dataset(&config.dataset, config.split).map_err(harness)?;
    let backends = backends(&config, args, &dataset)?;
    let record = run_experiment_with::<f64>(&config, &dataset, &backends)?;
    let path = RunRecord::<f64>::path_in(&config.run_dir());
    if args.json {
        let report = record.evaluation.as_ref().map(|e| e.report);
        println!(
            "{}",
            serde_json::json!({"record": path, "config_hash": record.config_hash, "report": report})
        );
    } else {
        print!(
            "{}",
            render_report(std::slice::from_ref(&record), ReportFormat::Markdown)
        );
        eprintln!("record: {}", path.display());
    }
    Ok(())
}

fn cmd_retrieve(
    args: &RetrieverArgs,
    query: Option<&str>,
    dataset: Option<&PathBuf>,
    split: Split,
) -> Result<(), Failure> {
    let spec = args.spec();
    let retriever = build_retriever::<f64>(&spec)?;
    let queries: Vec<String> = match (query, dataset) {
        (Some(q), _) => vec![q.to_string()],
        (None, Some(path)) => load_dataset(path, split)
            .map_err(harness)?
            .samples
            .into_iter()
            .map(|s| s.question)
            .collect(),
        (None, None) => return Err(Failure::config("give --query or --dataset")),
    };
    for q in queries {
        let result = retriever.retrieve(&q, args.k).map_err(harness)?;
        println!("{}", serde_json::to_string(&result).map_err(Failure::config)?);
    }
    Ok(())
}

fn cmd_audit(
    args: &RetrieverArgs,
    dataset: &PathBuf,
    split: Split,
    also_k: &[usize],
    json: bool,
) -> Result<(), Failure> {
    let dataset = load_dataset(dataset, split).map_err(harness)?;
    let retriever = build_retriever::<f64>(&args.spec())?;
    let mut ks = vec![args.k];
    ks.extend_from_slice(also_k);
    let reports = ks
        .into_iter()
        .map(|k| upper_bound_audit(&dataset, retriever.as_ref(), k))
        .collect::<Result<Vec<_>, _>>()
        .map_err(harness)?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&reports).map_err(Failure::config)?
        );
    } else {
        print!("{}", render_upper_bound_table(&reports));
    }
    Ok(())
}

fn cmd_index(
    corpus: &PathBuf,
    out: &PathBuf,
    dense_dim: Option<usize>,
    dense_out: Option<&PathBuf>,
) -> Result<(), Failure> {
    let index = build_index(read_corpus(corpus).map_err(harness)?).map_err(harness)?;
    index.save(out).map_err(harness)?;
    eprintln!(
        "indexed {} passages, {} tokens",
        index.len(),
        index.total_tokens()
    );
    if let (Some(dim), Some(path)) = (dense_dim, dense_out) {
        if dim == 0 {
            return Err(Failure::config("--dense-dim must be at least 1"));
        }
        HashingEmbedder { dim }
            .embed_corpus::<f64>(&index)
            .save(path)
            .map_err(harness)?;
    }
    Ok(())
}

fn cmd_report(records: &[PathBuf], format: ReportFormat) -> Result<(), Failure> {
    let records = records
        .iter()
        .map(RunRecord::<f64>::load)
        .collect::<Result<Vec<_>, _>>()?;
    print!("{}", render_report(&records, format));
    Ok(())
}

fn cmd_serve(addr: SocketAddr, sessions_dir: &PathBuf) -> Result<(), Failure> {
    let registry = SessionRegistry::open(sessions_dir).map_err(Failure::config)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(Failure::config)?;
    runtime
        .block_on(asqa_http::serve(addr, Arc::new(registry)))
        .map_err(Failure::config)
}

fn cmd_training_config(profile: TrainingProfile, out: Option<&PathBuf>) -> Result<(), Failure> {
    let text = emit_training_config(profile).to_key_values();
    match out {
        Some(path) => std::fs::write(path, text).map_err(Failure::config),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ingest { source, split, out } => {
            let ds = ingest_asqa_file(&source, split, &out)?;
            eprintln!("wrote {} samples to {}", ds.len(), out.display());
            Ok(())
        }
        Command::Index {
            corpus,
            out,
            dense_dim,
            dense_out,
        } => cmd_index(&corpus, &out, dense_dim, dense_out.as_ref()),
        Command::Retrieve {
            retriever,
            query,
            dataset,
            split,
        } => cmd_retrieve(&retriever, query.as_deref(), dataset.as_ref(), split),
        Command::AuditUpperBound {
            retriever,
            dataset,
            split,
            also_k,
            json,
        } => cmd_audit(&retriever, &dataset, split, &also_k, json),
        Command::Run(args) => cmd_run(&args),
        Command::Report { records, format } => cmd_report(&records, format),
        Command::ServeAnnotation { addr, sessions_dir } => cmd_serve(addr, &sessions_dir),
        Command::TrainingConfig { profile, out } => cmd_training_config(profile, out.as_ref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
