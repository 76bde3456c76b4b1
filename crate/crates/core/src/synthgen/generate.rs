use std::collections::{BTreeSet, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::Serialize;
use thiserror::Error;

use super::client::{complete, CompleteError, CompletionClient};
use super::{
    build_prompt, generated_query_id, postprocess_completion, read_queries, write_queries,
    write_query_line, GenerationConfig, Origin, PromptTemplate, QueryText,
};
use crate::exec::{map_limited, Execution};
use crate::questionnaire::{all_response_options, Questionnaire, ResponseOption};

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid generation config: {0}")]
    Config(String),
    #[error("every option failed; first failure at symptom {symptom_index} option {option_index}: {source}")]
    AllOptionsFailed {
        symptom_index: u8,
        option_index: u8,
        #[source]
        source: CompleteError,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct OptionReport {
    pub symptom_index: u8,
    pub option_index: u8,
    pub texts: usize,
    pub calls: u32,
    pub retries: u32,
    pub shortfall: usize,
    pub tokens: u64,
    /// Loaded from an earlier, interrupted run instead of generated now.
    pub resumed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GenerationReport {
    pub n_per_option: usize,
    pub model_name: String,
    pub total_texts: usize,
    pub total_calls: u32,
    pub total_retries: u32,
    pub total_tokens: u64,
    pub failed_options: usize,
    pub options_with_shortfall: usize,
    /// Texts identical to an earlier text anywhere in the dataset. They are
    /// kept, only counted.
    pub exact_duplicates: usize,
    pub options: Vec<OptionReport>,
}

struct OptionOutcome {
    report: OptionReport,
    texts: Vec<QueryText>,
    failure: Option<CompleteError>,
}

fn run_option(
    q: &Questionnaire,
    option: &ResponseOption,
    template: &PromptTemplate,
    client: &dyn CompletionClient,
    cfg: &GenerationConfig,
) -> OptionOutcome {
    let symptom = q
        .symptom(option.symptom_index)
        .expect("option belongs to questionnaire");
    let prompt = build_prompt(template, cfg.n_per_option, symptom, option);
    let mut report = OptionReport {
        symptom_index: option.symptom_index,
        option_index: option.option_index,
        ..OptionReport::default()
    };
    let mut texts: Vec<String> = Vec::with_capacity(cfg.n_per_option);
    let mut failure = None;
    let budget = 1 + cfg.extra_calls;

    while texts.len() < cfg.n_per_option && report.calls < budget {
        report.calls += 1;
        match complete(client, &prompt, cfg) {
            Ok(outcome) => {
                report.retries += outcome.retries;
                report.tokens += outcome.completion.tokens.unwrap_or(0);
                let room = cfg.n_per_option - texts.len();
                texts.extend(postprocess_completion(&outcome.completion.text).into_iter().take(room));
            }
            Err(e) => {
                log::warn!(
                    "symptom {} option {}: {e}",
                    option.symptom_index,
                    option.option_index
                );
                report.error = Some(format!(
                    "symptom {} option {}: {e}",
                    option.symptom_index, option.option_index
                ));
                failure = Some(e);
                break;
            }
        }
    }
    report.texts = texts.len();
    report.shortfall = cfg.n_per_option - texts.len();
    let texts = texts
        .into_iter()
        .enumerate()
        .map(|(j, text)| QueryText {
            query_id: generated_query_id(option.symptom_index, option.option_index, j + 1),
            symptom_index: option.symptom_index,
            option_index: option.option_index,
            origin: Origin::Generated,
            text,
        })
        .collect();
    OptionOutcome {
        report,
        texts,
        failure,
    }
}

/// Core loop shared by the in-memory and file-backed entry points. `skip`
/// holds options already generated; `sink` receives each option's texts as
/// soon as they are complete.
fn generate_with(
    q: &Questionnaire,
    template: &PromptTemplate,
    client: &dyn CompletionClient,
    cfg: &GenerationConfig,
    skip: &HashSet<(u8, u8)>,
    sink: &(dyn Fn(&[QueryText]) -> std::io::Result<()> + Sync),
) -> Result<(Vec<QueryText>, Vec<OptionReport>), GenerateError> {
    cfg.validate().map_err(GenerateError::Config)?;
    let todo: Vec<&ResponseOption> = all_response_options(q)
        .into_iter()
        .filter(|o| !skip.contains(&(o.symptom_index, o.option_index)))
        .collect();
    let sink_error = Mutex::new(None);
    let outcomes = map_limited(Execution::default(), &todo, cfg.max_in_flight, |option| {
        let outcome = run_option(q, option, template, client, cfg);
        if !outcome.texts.is_empty() {
            if let Err(e) = sink(&outcome.texts) {
                sink_error.lock().unwrap().get_or_insert(e);
            }
        }
        outcome
    });
    if let Some(e) = sink_error.into_inner().unwrap() {
        return Err(GenerateError::Io {
            path: "query output".into(),
            message: e.to_string(),
        });
    }

    let succeeded = outcomes.iter().any(|o| !o.texts.is_empty() || o.failure.is_none());
    if !outcomes.is_empty() && !succeeded {
        let first = outcomes.into_iter().next().expect("non-empty");
        return Err(GenerateError::AllOptionsFailed {
            symptom_index: first.report.symptom_index,
            option_index: first.report.option_index,
            source: first.failure.expect("failed option has an error"),
        });
    }
    let mut texts = Vec::new();
    let mut reports = Vec::new();
    for o in outcomes {
        texts.extend(o.texts);
        reports.push(o.report);
    }
    Ok((texts, reports))
}

fn summarize(cfg: &GenerationConfig, all: &[QueryText], mut options: Vec<OptionReport>) -> GenerationReport {
    options.sort_by_key(|o| (o.symptom_index, o.option_index));
    let mut seen = HashSet::new();
    let exact_duplicates = all.iter().filter(|t| !seen.insert(t.text.as_str())).count();
    GenerationReport {
        n_per_option: cfg.n_per_option,
        model_name: cfg.model_name.clone(),
        total_texts: all.len(),
        total_calls: options.iter().map(|o| o.calls).sum(),
        total_retries: options.iter().map(|o| o.retries).sum(),
        total_tokens: options.iter().map(|o| o.tokens).sum(),
        failed_options: options.iter().filter(|o| o.error.is_some()).count(),
        options_with_shortfall: options.iter().filter(|o| o.shortfall > 0).count(),
        exact_duplicates,
        options,
    }
}

/// Generates up to `cfg.n_per_option` texts for each of the questionnaire's
/// response options. Per-option failures are recorded in the report; the call
/// fails only when no option succeeds.
pub fn generate_dataset(
    q: &Questionnaire,
    template: &PromptTemplate,
    client: &dyn CompletionClient,
    cfg: &GenerationConfig,
) -> Result<(Vec<QueryText>, GenerationReport), GenerateError> {
    let (mut texts, reports) = generate_with(q, template, client, cfg, &HashSet::new(), &|_| Ok(()))?;
    texts.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    let report = summarize(cfg, &texts, reports);
    Ok((texts, report))
}

/// Like [`generate_dataset`], persisting each option's texts to `path` as soon
/// as they exist. Options already present in `path` with a full quota are
/// kept, not regenerated. On success the file is rewritten in query-id order.
pub fn generate_to_file(
    q: &Questionnaire,
    template: &PromptTemplate,
    client: &dyn CompletionClient,
    cfg: &GenerationConfig,
    path: &Path,
) -> Result<(Vec<QueryText>, GenerationReport), GenerateError> {
    let io_err = |e: std::io::Error| GenerateError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut existing = load_existing(q, path)?;
    // Options below quota (interrupted mid-option or short) are regenerated.
    let mut per_option = std::collections::HashMap::new();
    for t in &existing {
        *per_option.entry((t.symptom_index, t.option_index)).or_insert(0usize) += 1;
    }
    existing.retain(|t| per_option[&(t.symptom_index, t.option_index)] >= cfg.n_per_option);
    let done: HashSet<(u8, u8)> = existing
        .iter()
        .map(|t| (t.symptom_index, t.option_index))
        .collect();
    if !done.is_empty() {
        log::info!("resuming: {} options already generated", done.len());
    }

    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err)?;
    let file = Mutex::new(file);
    let sink = |texts: &[QueryText]| -> std::io::Result<()> {
        let mut buf = Vec::new();
        for t in texts {
            write_query_line(t, &mut buf)?;
        }
        let mut f = file.lock().unwrap();
        f.write_all(&buf)?;
        f.flush()
    };
    let (fresh, mut reports) = generate_with(q, template, client, cfg, &done, &sink)?;
    drop(file);

    let resumed: BTreeSet<(u8, u8)> = done.iter().copied().collect();
    for (s, o) in resumed {
        let count = existing
            .iter()
            .filter(|t| (t.symptom_index, t.option_index) == (s, o))
            .count();
        reports.push(OptionReport {
            symptom_index: s,
            option_index: o,
            texts: count,
            shortfall: cfg.n_per_option.saturating_sub(count),
            resumed: true,
            ..OptionReport::default()
        });
    }
    let mut all = existing;
    all.extend(fresh);
    all.sort_by(|a, b| a.query_id.cmp(&b.query_id));

    let tmp = path.with_extension("tmp");
    let out = File::create(&tmp).map_err(io_err)?;
    write_queries(&all, std::io::BufWriter::new(out)).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)?;

    let report = summarize(cfg, &all, reports);
    Ok((all, report))
}

/// Reads complete lines of an interrupted output file, dropping a trailing
/// partial line.
fn load_existing(q: &Questionnaire, path: &Path) -> Result<Vec<QueryText>, GenerateError> {
    let io_err = |message: String| GenerateError::Io {
        path: path.display().to_string(),
        message,
    };
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(e.to_string())),
    };
    let complete_len = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
    if complete_len != bytes.len() {
        log::warn!("dropping partial trailing line in {}", path.display());
        let f = OpenOptions::new().write(true).open(path).map_err(|e| io_err(e.to_string()))?;
        f.set_len(complete_len as u64).map_err(|e| io_err(e.to_string()))?;
    }
    let texts = read_queries(BufReader::new(&bytes[..complete_len]), Some(q))
        .map_err(|e| io_err(e.to_string()))?;
    if let Some(t) = texts.iter().find(|t| t.origin != Origin::Generated) {
        return Err(io_err(format!("unexpected non-generated query {}", t.query_id)));
    }
    Ok(texts)
}
