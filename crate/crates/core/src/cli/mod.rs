//! The `symsearch` command line.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 completion-service error.

mod manifest;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::corpus::{
    preprocess_corpus, read_canonical, read_corpus_dir, write_canonical, AcceptAll, ExternalDetector,
    LanguageDetector, StopwordDetector, DEFAULT_STOPWORD_RATE,
};
use crate::evaluation::{aggregate, evaluate_run, pool_runs, read_qrels, render_report, write_pool, AggregationMode};
use crate::exec::{configure_jobs, Execution};
use crate::questionnaire::{load_questionnaire, Questionnaire};
use crate::retrieval::{build_run, read_run, write_run, OriginFilter, RunEntry};
use crate::synthgen::{
    generate_to_file, original_queries, read_queries, CompletionClient, GenerateError, GenerationConfig,
    HttpCompletionClient, MockCompletionClient, PromptTemplate, QueryText,
};
use crate::vector_store::{load_store, EmbeddingStore};
pub use manifest::{EncoderPaths, Manifest, RunSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Service(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Service(_) => 3,
        }
    }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn at(path: &Path) -> impl Fn(std::fmt::Arguments<'_>) -> CliError + '_ {
    move |m| CliError::Data(format!("{}: {m}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "symsearch", version, about = "Symptom-oriented sentence retrieval and evaluation")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse per-user TREC files, strip URLs and drop non-English sentences.
    Ingest(IngestArgs),
    /// Generate synthetic queries for every response option.
    Generate(GenerateArgs),
    /// Write `id<TAB>text` lines for an external embedding step.
    ExportTexts(ExportArgs),
    /// Build TREC run files from embedding stores.
    Retrieve(RetrieveArgs),
    /// Score a run file against qrels.
    Evaluate(EvaluateArgs),
    /// Build the assessment pool from run files.
    Pool(PoolArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    corpus_dir: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `stopword`, `accept-all` or `external:<command>`.
    #[arg(long, default_value = "stopword")]
    detector: String,
    /// Minimum English stopword rate for the stopword detector.
    #[arg(long, default_value_t = DEFAULT_STOPWORD_RATE)]
    stopword_rate: f64,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    /// Questionnaire TOML; the bundled copy is used otherwise.
    #[arg(long)]
    questionnaire: Option<PathBuf>,
    /// Use the offline mock instead of the completion service.
    #[arg(long)]
    mock: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Texts per response option.
    #[arg(long, default_value_t = 30)]
    n: usize,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_tokens: Option<u32>,
    #[arg(long)]
    retries: Option<u32>,
    #[arg(long)]
    extra_calls: Option<u32>,
    #[arg(long)]
    max_in_flight: Option<usize>,
    /// Prompt template file with `{N}`, `{symptom}` and `{item}` placeholders.
    #[arg(long)]
    template: Option<PathBuf>,
    /// Generation report (JSON); defaults to `<out>.report.json`.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    out: PathBuf,
    /// Canonical corpus; kept sentences are exported.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Generated query file.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Include the questionnaire's response options.
    #[arg(long)]
    originals: bool,
    #[arg(long)]
    questionnaire: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RetrieveArgs {
    /// Run manifest (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    questionnaire: Option<PathBuf>,
    /// Generated query file.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Single run without a manifest: corpus embeddings.
    #[arg(long, requires_all = ["query_embeddings", "tag"], conflicts_with = "config")]
    corpus_embeddings: Option<PathBuf>,
    #[arg(long)]
    query_embeddings: Option<PathBuf>,
    #[arg(long)]
    tag: Option<String>,
    #[arg(long, default_value = "all")]
    origin: String,
    #[arg(long)]
    per_query_k: Option<usize>,
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long, default_value = "majority")]
    mode: AggregationMode,
    /// Report file; printed to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PoolArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    runs: Vec<PathBuf>,
    #[arg(long, default_value_t = crate::evaluation::DEFAULT_POOL_DEPTH)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `args`, runs the subcommand and maps the outcome to an exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    configure_jobs(cli.jobs);
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let exec = Execution::default();
    match &cli.command {
        Command::Ingest(a) => ingest(a, cli.force, exec),
        Command::Generate(a) => generate(a, cli.force),
        Command::ExportTexts(a) => export_texts(a, cli.force),
        Command::Retrieve(a) => retrieve(a, cli.force, exec),
        Command::Evaluate(a) => evaluate(a, cli.force, exec),
        Command::Pool(a) => pool(a, cli.force),
    }
}

fn check_writable(path: &Path, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Usage(format!(
            "{} already exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(())
}

/// Writes `path` in one go after `fill` succeeds, via a sibling temp file.
fn write_output(path: &Path, fill: impl FnOnce(&mut Vec<u8>) -> Result<(), CliError>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    fill(&mut buf)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| at(dir)(format_args!("{e}")))?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, &buf)
        .and_then(|_| fs::rename(&tmp, path))
        .map_err(|e| at(path)(format_args!("{e}")))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| at(path)(format_args!("{e}")))
}

fn questionnaire(path: Option<&Path>) -> Result<Questionnaire, CliError> {
    match path {
        Some(p) => load_questionnaire(p).map_err(data),
        None => Ok(Questionnaire::fixture()),
    }
}

fn detector(spec: &str, rate: f64) -> Result<Box<dyn LanguageDetector>, CliError> {
    if let Some(cmd) = spec.strip_prefix("external:") {
        return ExternalDetector::from_command(cmd)
            .map(|d| Box::new(d) as Box<dyn LanguageDetector>)
            .ok_or_else(|| CliError::Usage("external detector needs a command".into()));
    }
    match spec {
        "stopword" => {
            if !(0.0..=1.0).contains(&rate) {
                return Err(CliError::Usage(format!("stopword rate {rate} outside [0, 1]")));
            }
            Ok(Box::new(StopwordDetector::with_min_rate(rate)))
        }
        "accept-all" => Ok(Box::new(AcceptAll)),
        other => Err(CliError::Usage(format!(
            "unknown detector {other:?} (stopword, accept-all, external:<command>)"
        ))),
    }
}

fn ingest(a: &IngestArgs, force: bool, exec: Execution) -> Result<(), CliError> {
    let detector = detector(&a.detector, a.stopword_rate)?;
    check_writable(&a.out, force)?;
    if !a.corpus_dir.is_dir() {
        return Err(at(&a.corpus_dir)(format_args!("not a directory")));
    }
    let records = read_corpus_dir(&a.corpus_dir, exec).map_err(data)?;
    let (records, stats) = preprocess_corpus(records, detector.as_ref(), exec).map_err(data)?;
    write_output(&a.out, |buf| write_canonical(&records, buf).map_err(data))?;
    print!("{stats}");
    Ok(())
}

fn generate(a: &GenerateArgs, force: bool) -> Result<(), CliError> {
    let q = questionnaire(a.questionnaire.as_deref())?;
    let defaults = GenerationConfig::default();
    let cfg = GenerationConfig {
        n_per_option: a.n,
        model_name: a.model.clone().unwrap_or(defaults.model_name.clone()),
        temperature: a.temperature.unwrap_or(defaults.temperature),
        max_tokens: a.max_tokens.unwrap_or(defaults.max_tokens),
        retries: a.retries.unwrap_or(defaults.retries),
        extra_calls: a.extra_calls.unwrap_or(defaults.extra_calls),
        max_in_flight: a.max_in_flight.unwrap_or(defaults.max_in_flight),
        seed: Some(a.seed),
        ..defaults
    };
    cfg.validate().map_err(CliError::Usage)?;
    let template = match &a.template {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| at(p)(format_args!("{e}")))?;
            PromptTemplate::new(text).map_err(|e| CliError::Usage(e.to_string()))?
        }
        None => PromptTemplate::default(),
    };
    let client: Box<dyn CompletionClient> = if a.mock {
        Box::new(MockCompletionClient::new(a.seed))
    } else {
        Box::new(HttpCompletionClient::from_env().map_err(|e| CliError::Service(e.to_string()))?)
    };
    if force && a.out.exists() {
        fs::remove_file(&a.out).map_err(|e| at(&a.out)(format_args!("{e}")))?;
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| at(dir)(format_args!("{e}")))?;
    }
    let (texts, report) = generate_to_file(&q, &template, client.as_ref(), &cfg, &a.out).map_err(|e| match e {
        GenerateError::AllOptionsFailed { .. } => CliError::Service(e.to_string()),
        GenerateError::Config(m) => CliError::Usage(m),
        GenerateError::Io { .. } => data(e),
    })?;
    let report_path = a.report.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".report.json");
        p.into()
    });
    write_output(&report_path, |buf| {
        serde_json::to_writer_pretty(&mut *buf, &report).map_err(data)?;
        buf.push(b'\n');
        Ok(())
    })?;
    if report.failed_options > 0 {
        log::warn!(
            "{} options failed; re-run the same command to resume them",
            report.failed_options
        );
    }
    println!(
        "texts = {}\ncalls = {}\nretries = {}\nfailed_options = {}\noptions_with_shortfall = {}",
        texts.len(),
        report.total_calls,
        report.total_retries,
        report.failed_options,
        report.options_with_shortfall
    );
    Ok(())
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn export_texts(a: &ExportArgs, force: bool) -> Result<(), CliError> {
    if a.corpus.is_none() && a.queries.is_none() && !a.originals {
        return Err(CliError::Usage("nothing to export: pass --corpus, --queries or --originals".into()));
    }
    check_writable(&a.out, force)?;
    let mut rows: Vec<(String, String)> = Vec::new();
    if let Some(p) = &a.corpus {
        let records = read_canonical(open(p)?).map_err(|e| at(p)(format_args!("{e}")))?;
        rows.extend(records.into_iter().filter(|r| r.kept).map(|r| (r.doc_id, r.text)));
    }
    let q = questionnaire(a.questionnaire.as_deref())?;
    if a.originals {
        rows.extend(original_queries(&q).into_iter().map(|t| (t.query_id, t.text)));
    }
    if let Some(p) = &a.queries {
        let texts = read_queries(open(p)?, Some(&q)).map_err(|e| at(p)(format_args!("{e}")))?;
        rows.extend(texts.into_iter().map(|t| (t.query_id, t.text)));
    }
    write_output(&a.out, |buf| {
        for (id, text) in &rows {
            writeln!(buf, "{id}\t{}", one_line(text)).map_err(data)?;
        }
        Ok(())
    })?;
    println!("exported = {}", rows.len());
    Ok(())
}

fn retrieve(a: &RetrieveArgs, force: bool, exec: Execution) -> Result<(), CliError> {
    let mut manifest = match (&a.config, &a.corpus_embeddings) {
        (Some(path), _) => Manifest::load(path).map_err(CliError::Usage)?,
        (None, Some(corpus)) => {
            let tag = a.tag.clone().expect("clap requires --tag");
            Manifest {
                encoders: BTreeMap::from([(
                    "default".to_string(),
                    EncoderPaths {
                        corpus: corpus.clone(),
                        queries: a.query_embeddings.clone().expect("clap requires --query-embeddings"),
                    },
                )]),
                runs: vec![RunSpec {
                    tag,
                    origin: a.origin.clone(),
                    encoder: "default".into(),
                    per_query_k: None,
                    cap: None,
                }],
                ..Manifest::default()
            }
        }
        (None, None) => {
            return Err(CliError::Usage(
                "pass --config or --corpus-embeddings/--query-embeddings/--tag".into(),
            ))
        }
    };
    if a.out_dir.is_some() {
        manifest.out_dir = a.out_dir.clone();
    }
    if a.queries.is_some() {
        manifest.queries = a.queries.clone();
    }
    if a.questionnaire.is_some() {
        manifest.questionnaire = a.questionnaire.clone();
    }
    let runs = manifest.run_configs(a.per_query_k, a.cap).map_err(CliError::Usage)?;
    let out_dir = manifest.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let outputs: Vec<PathBuf> = runs.iter().map(|r| out_dir.join(format!("{}.txt", r.run_tag))).collect();
    for p in &outputs {
        check_writable(p, force)?;
    }

    let q = questionnaire(manifest.questionnaire.as_deref())?;
    let mut queries: Vec<QueryText> = original_queries(&q);
    match &manifest.queries {
        Some(p) => {
            let generated = read_queries(open(p)?, Some(&q)).map_err(|e| at(p)(format_args!("{e}")))?;
            queries.extend(generated);
        }
        None if runs.iter().any(|r| r.origin_filter != OriginFilter::Original) => {
            return Err(CliError::Usage("runs over generated queries need a query file (--queries)".into()));
        }
        None => {}
    }

    let mut stores: BTreeMap<&str, (EmbeddingStore, EmbeddingStore)> = BTreeMap::new();
    for (cfg, out) in runs.iter().zip(&outputs) {
        let label = cfg.encoder_label.as_str();
        if !stores.contains_key(label) {
            let paths = &manifest.encoders[label];
            let load = |p: &Path| load_store(p).map_err(|e| at(p)(format_args!("{e}")));
            let pair = (load(&paths.corpus)?, load(&paths.queries)?);
            log::info!(
                "encoder {label}: {} corpus vectors, {} query vectors, dim {}",
                pair.0.len(),
                pair.1.len(),
                pair.0.dim()
            );
            stores.insert(label, pair);
        }
        let (corpus, query_store) = &stores[label];
        let run = build_run(&q, &queries, corpus, query_store, cfg, exec)
            .map_err(|e| CliError::Data(format!("run {} (encoder {label}): {e}", cfg.run_tag)))?;
        write_output(out, |buf| write_run(&run, buf).map_err(data))?;
        println!("{}\t{}", out.display(), run.len());
    }
    Ok(())
}

fn load_run(path: &Path) -> Result<Vec<RunEntry>, CliError> {
    read_run(open(path)?).map_err(|e| at(path)(format_args!("{e}")))
}

fn evaluate(a: &EvaluateArgs, force: bool, exec: Execution) -> Result<(), CliError> {
    if let Some(out) = &a.out {
        check_writable(out, force)?;
    }
    let run = load_run(&a.run)?;
    let (_, judgments) = read_qrels(open(&a.qrels)?).map_err(|e| at(&a.qrels)(format_args!("{e}")))?;
    let qrels = aggregate(&judgments, a.mode).map_err(|e| at(&a.qrels)(format_args!("{e}")))?;
    let report = evaluate_run(&run, &qrels, exec).map_err(data)?;
    let text = render_report(&report);
    match &a.out {
        Some(out) => write_output(out, |buf| {
            buf.extend_from_slice(text.as_bytes());
            Ok(())
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pool(a: &PoolArgs, force: bool) -> Result<(), CliError> {
    if a.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    check_writable(&a.out, force)?;
    let mut entries = Vec::new();
    for p in &a.runs {
        entries.extend(load_run(p)?);
    }
    let pool = pool_runs(&entries, a.k);
    write_output(&a.out, |buf| write_pool(&pool, buf).map_err(data))?;
    for (s, docs) in &pool {
        println!("{s}\t{}", docs.len());
    }
    Ok(())
}
