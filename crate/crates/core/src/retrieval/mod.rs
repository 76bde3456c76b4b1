//! Per-symptom rankings built from per-query top-k lists.
//!
//! Every query of a symptom retrieves its own `per_query_k` nearest corpus
//! sentences. The lists are merged keeping each document's best score, sorted
//! by (score desc, doc id asc), and cut at `cap` entries.

mod run_file;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::exec::Execution;
use crate::questionnaire::Questionnaire;
use crate::synthgen::{Origin, QueryText};
use crate::vector_store::{EmbeddingStore, StoreError};
pub use run_file::{read_run, write_run, RunFileError, MAX_ENTRIES_PER_SYMPTOM};

pub const DEFAULT_PER_QUERY_K: usize = 50;
pub const DEFAULT_CAP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OriginFilter {
    Original,
    Generated,
    All,
}

impl OriginFilter {
    pub fn accepts(self, origin: Origin) -> bool {
        match self {
            OriginFilter::Original => origin == Origin::Original,
            OriginFilter::Generated => origin == Origin::Generated,
            OriginFilter::All => true,
        }
    }
}

impl FromStr for OriginFilter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(OriginFilter::Original),
            "generated" => Ok(OriginFilter::Generated),
            "all" => Ok(OriginFilter::All),
            other => Err(format!("unknown origin filter {other:?} (original|generated|all)")),
        }
    }
}

impl fmt::Display for OriginFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OriginFilter::Original => "original",
            OriginFilter::Generated => "generated",
            OriginFilter::All => "all",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub run_tag: String,
    pub origin_filter: OriginFilter,
    pub encoder_label: String,
    pub per_query_k: usize,
    pub cap: usize,
}

impl RunConfig {
    pub fn new(run_tag: &str, origin_filter: OriginFilter, encoder_label: &str) -> Self {
        RunConfig {
            run_tag: run_tag.to_string(),
            origin_filter,
            encoder_label: encoder_label.to_string(),
            per_query_k: DEFAULT_PER_QUERY_K,
            cap: DEFAULT_CAP,
        }
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        let bad = |m: String| Err(RetrievalError::InvalidConfig(m));
        if self.run_tag.is_empty() || self.run_tag.chars().any(char::is_whitespace) {
            return bad(format!("run tag {:?} must be a non-empty token", self.run_tag));
        }
        if self.per_query_k == 0 {
            return bad("per_query_k must be at least 1".into());
        }
        if self.cap < self.per_query_k {
            return bad(format!(
                "cap {} is smaller than per_query_k {}",
                self.cap, self.per_query_k
            ));
        }
        if self.cap > MAX_ENTRIES_PER_SYMPTOM {
            return bad(format!(
                "cap {} exceeds the run file limit of {MAX_ENTRIES_PER_SYMPTOM}",
                self.cap
            ));
        }
        Ok(())
    }

    /// The five standard configurations: original, generated and all queries
    /// with the semantic-search encoder, original and generated queries with
    /// the mental-health encoder.
    pub fn standard_runs(semantic_encoder: &str, mental_health_encoder: &str) -> Vec<RunConfig> {
        vec![
            RunConfig::new("SemSearchOnBDI2Queries", OriginFilter::Original, semantic_encoder),
            RunConfig::new("SemSearchOnGeneratedQueries", OriginFilter::Generated, semantic_encoder),
            RunConfig::new("SemSearchOnAllQueries", OriginFilter::All, semantic_encoder),
            RunConfig::new(
                "SemSearchOnBDI2QueriesMentalRoberta",
                OriginFilter::Original,
                mental_health_encoder,
            ),
            RunConfig::new(
                "SemSearchOnGeneratedQueriesMentalRoberta",
                OriginFilter::Generated,
                mental_health_encoder,
            ),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub symptom_index: u8,
    pub doc_id: String,
    pub rank: u32,
    pub score: f64,
    pub run_tag: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum RetrievalError {
    #[error("query {0:?} has no vector in the query store")]
    MissingQueryVector(String),
    #[error("corpus store has dim {corpus} but query store has dim {query}")]
    DimMismatch { corpus: usize, query: usize },
    #[error("queries span several symptoms ({0} and {1})")]
    MixedSymptoms(u8, u8),
    #[error("invalid run config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

fn check_dims(corpus: &EmbeddingStore, queries: &EmbeddingStore) -> Result<(), RetrievalError> {
    if corpus.dim() != queries.dim() {
        return Err(RetrievalError::DimMismatch {
            corpus: corpus.dim(),
            query: queries.dim(),
        });
    }
    Ok(())
}

/// Ranks the corpus for one symptom. `queries` must all belong to the same
/// symptom; the caller applies the origin filter.
pub fn build_symptom_ranking(
    queries: &[&QueryText],
    corpus: &EmbeddingStore,
    query_store: &EmbeddingStore,
    cfg: &RunConfig,
    exec: Execution,
) -> Result<Vec<RunEntry>, RetrievalError> {
    cfg.validate()?;
    check_dims(corpus, query_store)?;
    let Some(first) = queries.first() else {
        return Ok(Vec::new());
    };
    if let Some(other) = queries.iter().find(|q| q.symptom_index != first.symptom_index) {
        return Err(RetrievalError::MixedSymptoms(first.symptom_index, other.symptom_index));
    }
    let vectors = queries
        .iter()
        .map(|q| {
            query_store
                .get(&q.query_id)
                .ok_or_else(|| RetrievalError::MissingQueryVector(q.query_id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let hits = exec.map(&vectors, |v| corpus.top_k(v, cfg.per_query_k, Execution::Sequential));
    let mut best: HashMap<String, f32> = HashMap::new();
    for list in hits {
        for doc in list? {
            best.entry(doc.doc_id)
                .and_modify(|s| *s = s.max(doc.score))
                .or_insert(doc.score);
        }
    }
    let mut merged: Vec<(String, f32)> = best.into_iter().collect();
    merged.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    merged.truncate(cfg.cap);
    Ok(merged
        .into_iter()
        .enumerate()
        .map(|(i, (doc_id, score))| RunEntry {
            symptom_index: first.symptom_index,
            doc_id,
            rank: i as u32 + 1,
            score: score as f64,
            run_tag: cfg.run_tag.clone(),
        })
        .collect())
}

/// Builds the full run: one ranking per questionnaire symptom, in symptom
/// order, using the queries that pass the config's origin filter.
pub fn build_run(
    questionnaire: &Questionnaire,
    queries: &[QueryText],
    corpus: &EmbeddingStore,
    query_store: &EmbeddingStore,
    cfg: &RunConfig,
    exec: Execution,
) -> Result<Vec<RunEntry>, RetrievalError> {
    cfg.validate()?;
    check_dims(corpus, query_store)?;
    let symptoms: Vec<u8> = questionnaire.symptoms().iter().map(|s| s.index).collect();
    let per_symptom = exec.map(&symptoms, |&s| {
        let selected: Vec<&QueryText> = queries
            .iter()
            .filter(|q| q.symptom_index == s && cfg.origin_filter.accepts(q.origin))
            .collect();
        build_symptom_ranking(&selected, corpus, query_store, cfg, exec)
    });
    let mut run = Vec::new();
    for ranking in per_symptom {
        run.extend(ranking?);
    }
    Ok(run)
}
