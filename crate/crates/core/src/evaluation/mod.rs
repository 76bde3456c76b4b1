//! Relevance judgments, assessment pooling and run scoring.

mod metrics;
mod qrels;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::exec::Execution;
use crate::questionnaire::SYMPTOM_COUNT;
use crate::retrieval::RunEntry;
pub use metrics::{average_precision, ndcg_at, precision_at, r_precision};
pub use qrels::{read_qrels, write_qrels_extended, write_qrels_standard, QrelsError, QrelsFormat};
pub use report::render_report;

pub const DEFAULT_POOL_DEPTH: usize = 50;
pub const P_CUTOFF: usize = 10;
pub const NDCG_CUTOFF: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no relevant documents")]
    NoRelevant,
    #[error("cutoff must be at least 1")]
    ZeroCutoff,
    #[error("doc {doc_id} judged twice for symptom {symptom_index}")]
    DuplicateJudgment { symptom_index: u8, doc_id: String },
    #[error("symptom {0} outside 1..={SYMPTOM_COUNT}")]
    UnknownSymptom(u8),
    #[error("run mixes tags {0} and {1}; evaluate one run at a time")]
    MixedRunTags(String, String),
    #[error("no symptom has a relevant document under {0} aggregation")]
    NothingToEvaluate(AggregationMode),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Judgment {
    pub symptom_index: u8,
    pub doc_id: String,
    /// One binary label per annotator.
    pub labels: [bool; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregationMode {
    Majority,
    Unanimity,
}

impl AggregationMode {
    pub fn is_relevant(self, labels: &[bool; 3]) -> bool {
        let yes = labels.iter().filter(|&&l| l).count();
        match self {
            AggregationMode::Majority => yes >= 2,
            AggregationMode::Unanimity => yes == 3,
        }
    }
}

impl fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregationMode::Majority => "majority",
            AggregationMode::Unanimity => "unanimity",
        })
    }
}

impl FromStr for AggregationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "majority" => Ok(AggregationMode::Majority),
            "unanimity" => Ok(AggregationMode::Unanimity),
            other => Err(format!("unknown aggregation mode {other:?} (majority|unanimity)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QrelsSet {
    pub mode: AggregationMode,
    pub relevant: BTreeMap<u8, BTreeSet<String>>,
    pub judged: BTreeMap<u8, BTreeSet<String>>,
}

impl QrelsSet {
    pub fn relevant_for(&self, symptom: u8) -> Option<&BTreeSet<String>> {
        self.relevant.get(&symptom).filter(|s| !s.is_empty())
    }

    pub fn relevant_total(&self) -> usize {
        self.relevant.values().map(BTreeSet::len).sum()
    }

    pub fn judged_total(&self) -> usize {
        self.judged.values().map(BTreeSet::len).sum()
    }
}

pub fn aggregate(judgments: &[Judgment], mode: AggregationMode) -> Result<QrelsSet, EvalError> {
    let mut set = QrelsSet {
        mode,
        relevant: BTreeMap::new(),
        judged: BTreeMap::new(),
    };
    for j in judgments {
        if !(1..=SYMPTOM_COUNT as u8).contains(&j.symptom_index) {
            return Err(EvalError::UnknownSymptom(j.symptom_index));
        }
        let fresh = set
            .judged
            .entry(j.symptom_index)
            .or_default()
            .insert(j.doc_id.clone());
        if !fresh {
            return Err(EvalError::DuplicateJudgment {
                symptom_index: j.symptom_index,
                doc_id: j.doc_id.clone(),
            });
        }
        if mode.is_relevant(&j.labels) {
            set.relevant
                .entry(j.symptom_index)
                .or_default()
                .insert(j.doc_id.clone());
        }
    }
    Ok(set)
}

/// Per symptom, the union over all runs of the entries ranked within the top
/// `k`. Ranks are per (run, symptom), so entries from any number of runs can
/// be passed together.
pub fn pool_runs<'a>(
    runs: impl IntoIterator<Item = &'a RunEntry>,
    k: usize,
) -> BTreeMap<u8, BTreeSet<String>> {
    let mut pool: BTreeMap<u8, BTreeSet<String>> = BTreeMap::new();
    for e in runs {
        if e.rank as usize <= k {
            pool.entry(e.symptom_index).or_default().insert(e.doc_id.clone());
        }
    }
    pool
}

/// Pool file: `symptom doc_id` per line, sorted.
pub fn write_pool<W: Write>(pool: &BTreeMap<u8, BTreeSet<String>>, mut out: W) -> std::io::Result<()> {
    for (s, docs) in pool {
        for d in docs {
            writeln!(out, "{s} {d}")?;
        }
    }
    out.flush()
}

pub fn read_pool<R: BufRead>(input: R) -> Result<BTreeMap<u8, BTreeSet<String>>, QrelsError> {
    let mut pool: BTreeMap<u8, BTreeSet<String>> = BTreeMap::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let bad = |message: String| QrelsError::Line { line: i + 1, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[..] {
            [] => {}
            [s, d] => {
                let s: u8 = s.parse().map_err(|_| bad(format!("bad symptom {s:?}")))?;
                pool.entry(s).or_default().insert(d.to_string());
            }
            _ => return Err(bad(format!("expected 2 fields, found {}", fields.len()))),
        }
    }
    Ok(pool)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Metrics {
    pub ap: f64,
    pub r_prec: f64,
    pub p_at_10: f64,
    pub ndcg_at_1000: f64,
}

impl Metrics {
    pub const NAMES: [&'static str; 4] = ["ap", "r_prec", "p_at_10", "ndcg_at_1000"];

    pub fn values(&self) -> [f64; 4] {
        [self.ap, self.r_prec, self.p_at_10, self.ndcg_at_1000]
    }

    pub fn compute<S: AsRef<str>>(ranking: &[S], relevant: &BTreeSet<String>) -> Result<Self, EvalError> {
        Ok(Metrics {
            ap: average_precision(ranking, relevant)?,
            r_prec: r_precision(ranking, relevant)?,
            p_at_10: precision_at(ranking, relevant, P_CUTOFF)?,
            ndcg_at_1000: ndcg_at(ranking, relevant, NDCG_CUTOFF)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymptomMetrics {
    pub symptom_index: u8,
    pub relevant: usize,
    pub retrieved: usize,
    pub relevant_retrieved: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub run_tag: String,
    pub mode: AggregationMode,
    pub per_symptom: Vec<SymptomMetrics>,
    pub mean: Metrics,
    pub evaluated_query_count: usize,
    /// Symptoms without any relevant document; left out of the means.
    pub excluded: Vec<u8>,
    pub relevant_total: usize,
    pub judged_total: usize,
}

/// Scores one run. Every symptom with at least one relevant document is
/// evaluated, including symptoms the run has no entries for.
pub fn evaluate_run(run: &[RunEntry], qrels: &QrelsSet, exec: Execution) -> Result<MetricsReport, EvalError> {
    let mut rankings: BTreeMap<u8, Vec<&RunEntry>> = BTreeMap::new();
    let run_tag = run.first().map(|e| e.run_tag.clone()).unwrap_or_default();
    for e in run {
        if !(1..=SYMPTOM_COUNT as u8).contains(&e.symptom_index) {
            return Err(EvalError::UnknownSymptom(e.symptom_index));
        }
        if e.run_tag != run_tag {
            return Err(EvalError::MixedRunTags(run_tag, e.run_tag.clone()));
        }
        rankings.entry(e.symptom_index).or_default().push(e);
    }
    let (evaluated, excluded): (Vec<u8>, Vec<u8>) =
        (1..=SYMPTOM_COUNT as u8).partition(|&s| qrels.relevant_for(s).is_some());
    if evaluated.is_empty() {
        return Err(EvalError::NothingToEvaluate(qrels.mode));
    }
    let per_symptom = exec
        .map(&evaluated, |&s| {
            let relevant = qrels.relevant_for(s).expect("partitioned on relevance");
            let mut entries = rankings.get(&s).cloned().unwrap_or_default();
            entries.sort_by_key(|e| e.rank);
            let ranking: Vec<&str> = entries.iter().map(|e| e.doc_id.as_str()).collect();
            Ok(SymptomMetrics {
                symptom_index: s,
                relevant: relevant.len(),
                retrieved: ranking.len(),
                relevant_retrieved: ranking.iter().filter(|d| relevant.contains(**d)).count(),
                metrics: Metrics::compute(&ranking, relevant)?,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>, EvalError>>()?;
    let n = per_symptom.len() as f64;
    let mut sums = [0.0; 4];
    for m in &per_symptom {
        for (acc, v) in sums.iter_mut().zip(m.metrics.values()) {
            *acc += v;
        }
    }
    Ok(MetricsReport {
        run_tag,
        mode: qrels.mode,
        evaluated_query_count: per_symptom.len(),
        per_symptom,
        mean: Metrics {
            ap: sums[0] / n,
            r_prec: sums[1] / n,
            p_at_10: sums[2] / n,
            ndcg_at_1000: sums[3] / n,
        },
        excluded,
        relevant_total: qrels.relevant_total(),
        judged_total: qrels.judged_total(),
    })
}
