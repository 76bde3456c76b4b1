//! Synthetic query generation: one prompt per response option, sent to a
//! completion service, with the completions split into individual posts.

pub mod client;
mod generate;
pub mod http;
pub mod mock;
mod postprocess;
mod prompt;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::questionnaire::{all_response_options, Questionnaire};
use crate::tsv;
pub use client::{complete, ClientError, CompleteError, Completion, CompletionClient, CompletionRequest};
pub use generate::{generate_dataset, generate_to_file, GenerateError, GenerationReport, OptionReport};
pub use http::HttpCompletionClient;
pub use mock::MockCompletionClient;
pub use postprocess::postprocess_completion;
pub use prompt::{build_prompt, PromptError, PromptTemplate, DEFAULT_TEMPLATE};

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub n_per_option: usize,
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Retries per call on transport, rate-limit and server errors.
    pub retries: u32,
    pub backoff_initial: Duration,
    pub seed: Option<u64>,
    /// Additional calls per option when a completion yields fewer than
    /// `n_per_option` posts.
    pub extra_calls: u32,
    pub max_in_flight: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            n_per_option: 30,
            model_name: "text-davinci-003".into(),
            temperature: 0.7,
            max_tokens: 1024,
            retries: 5,
            backoff_initial: Duration::from_secs(1),
            seed: None,
            extra_calls: 3,
            max_in_flight: 4,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_per_option == 0 {
            return Err("n_per_option must be at least 1".into());
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err("temperature must be a finite value >= 0".into());
        }
        if self.max_in_flight == 0 {
            return Err("max_in_flight must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    Original,
    Generated,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Original => "original",
            Origin::Generated => "generated",
        })
    }
}

impl FromStr for Origin {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(Origin::Original),
            "generated" => Ok(Origin::Generated),
            other => Err(format!("unknown origin {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryText {
    pub query_id: String,
    pub symptom_index: u8,
    pub option_index: u8,
    pub origin: Origin,
    pub text: String,
}

pub fn original_query_id(symptom_index: u8, option_index: u8) -> String {
    format!("o{symptom_index:02}-{option_index}")
}

pub fn generated_query_id(symptom_index: u8, option_index: u8, ordinal: usize) -> String {
    format!("g{symptom_index:02}-{option_index}-{ordinal:03}")
}

/// The response options themselves as queries, in questionnaire order.
pub fn original_queries(q: &Questionnaire) -> Vec<QueryText> {
    all_response_options(q)
        .into_iter()
        .map(|o| QueryText {
            query_id: original_query_id(o.symptom_index, o.option_index),
            symptom_index: o.symptom_index,
            option_index: o.option_index,
            origin: Origin::Original,
            text: o.text.clone(),
        })
        .collect()
}

#[derive(Debug, Error)]
#[error("query file line {line}: {message}")]
pub struct QueryFileError {
    pub line: usize,
    pub message: String,
}

/// Query file: `query_id \t symptom_index \t option_index \t origin \t text`.
pub fn write_queries<W: Write>(queries: &[QueryText], mut out: W) -> std::io::Result<()> {
    for q in queries {
        write_query_line(q, &mut out)?;
    }
    out.flush()
}

fn write_query_line<W: Write>(q: &QueryText, out: &mut W) -> std::io::Result<()> {
    writeln!(
        out,
        "{}\t{}\t{}\t{}\t{}",
        q.query_id,
        q.symptom_index,
        q.option_index,
        q.origin,
        tsv::escape(&q.text)
    )
}

/// Reads a query file. With a questionnaire, every (symptom, option) pair must
/// exist in it.
pub fn read_queries<R: BufRead>(
    input: R,
    questionnaire: Option<&Questionnaire>,
) -> Result<Vec<QueryText>, QueryFileError> {
    let mut out = Vec::new();
    let mut ids = std::collections::HashSet::new();
    for (i, line) in input.lines().enumerate() {
        let bad = |message: String| QueryFileError {
            line: i + 1,
            message,
        };
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.splitn(5, '\t').collect();
        let [id, s, o, origin, text] = cols[..] else {
            return Err(bad("expected 5 tab-separated columns".into()));
        };
        let symptom_index: u8 = s.parse().map_err(|_| bad(format!("bad symptom index {s:?}")))?;
        let option_index: u8 = o.parse().map_err(|_| bad(format!("bad option index {o:?}")))?;
        let origin: Origin = origin.parse().map_err(bad)?;
        let text = tsv::unescape(text).map_err(bad)?;
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(bad(format!("bad query id {id:?}")));
        }
        if text.trim().is_empty() {
            return Err(bad("empty query text".into()));
        }
        if let Some(q) = questionnaire {
            if q.option(symptom_index, option_index).is_none() {
                return Err(bad(format!(
                    "no response option {option_index} for symptom {symptom_index}"
                )));
            }
        }
        if !ids.insert(id.to_string()) {
            return Err(bad(format!("duplicate query id {id:?}")));
        }
        out.push(QueryText {
            query_id: id.to_string(),
            symptom_index,
            option_index,
            origin,
            text,
        });
    }
    Ok(out)
}
