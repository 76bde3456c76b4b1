//! TREC run files: `symptom Q0 doc_id rank score run_tag`, one entry per line.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use thiserror::Error;

use super::RunEntry;
use crate::questionnaire::SYMPTOM_COUNT;

pub const MAX_ENTRIES_PER_SYMPTOM: usize = 1000;

#[derive(Debug, Error)]
pub enum RunFileError {
    #[error("run entry {index}: {message}")]
    Invalid { index: usize, message: String },
    #[error("run file line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn is_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

/// Tracks the per-(tag, symptom) invariants shared by reader and writer.
#[derive(Default)]
struct Checker {
    groups: HashMap<(String, u8), Group>,
}

#[derive(Default)]
struct Group {
    count: usize,
    last_score: Option<f64>,
    docs: HashSet<String>,
}

impl Checker {
    /// `strict` additionally demands ranks 1..n in order and non-increasing
    /// scores; files written by other systems only get the reader's checks.
    fn check(&mut self, e: &RunEntry, strict: bool) -> Result<(), String> {
        if !(1..=SYMPTOM_COUNT as u8).contains(&e.symptom_index) {
            return Err(format!("symptom {} outside 1..={SYMPTOM_COUNT}", e.symptom_index));
        }
        if e.rank == 0 {
            return Err("rank 0 (ranks start at 1)".into());
        }
        if !e.score.is_finite() {
            return Err(format!("non-finite score {}", e.score));
        }
        if !is_token(&e.doc_id) {
            return Err(format!("bad doc id {:?}", e.doc_id));
        }
        if !is_token(&e.run_tag) {
            return Err(format!("bad run tag {:?}", e.run_tag));
        }
        let g = self.groups.entry((e.run_tag.clone(), e.symptom_index)).or_default();
        g.count += 1;
        if g.count > MAX_ENTRIES_PER_SYMPTOM {
            return Err(format!(
                "more than {MAX_ENTRIES_PER_SYMPTOM} entries for symptom {} in run {}",
                e.symptom_index, e.run_tag
            ));
        }
        if !g.docs.insert(e.doc_id.clone()) {
            return Err(format!("doc {} repeated for symptom {}", e.doc_id, e.symptom_index));
        }
        if strict {
            if e.rank as usize != g.count {
                return Err(format!("expected rank {}, found {}", g.count, e.rank));
            }
            if g.last_score.is_some_and(|s| e.score > s) {
                return Err(format!("score {} rises above the previous rank", e.score));
            }
            g.last_score = Some(e.score);
        }
        Ok(())
    }
}

/// Writes `entries` after checking every run invariant; nothing is written if
/// any entry is refused. Entries must already be sorted by (symptom, rank)
/// within each run tag.
pub fn write_run<W: Write>(entries: &[RunEntry], mut out: W) -> Result<(), RunFileError> {
    let mut checker = Checker::default();
    let mut last_symptom: HashMap<&str, u8> = HashMap::new();
    for (index, e) in entries.iter().enumerate() {
        let invalid = |message| RunFileError::Invalid { index, message };
        checker.check(e, true).map_err(invalid)?;
        let prev = last_symptom.insert(&e.run_tag, e.symptom_index);
        if prev.is_some_and(|p| p > e.symptom_index) {
            return Err(invalid(format!(
                "symptom {} after symptom {}",
                e.symptom_index,
                prev.unwrap_or_default()
            )));
        }
    }
    let mut buf = String::with_capacity(entries.len() * 40);
    for e in entries {
        use std::fmt::Write as _;
        let _ = writeln!(
            buf,
            "{} Q0 {} {} {:.6} {}",
            e.symptom_index, e.doc_id, e.rank, e.score, e.run_tag
        );
    }
    out.write_all(buf.as_bytes())?;
    out.flush()?;
    Ok(())
}

/// Reads a run file. Lines must have six whitespace-separated fields with
/// `Q0` second; blank lines are skipped.
pub fn read_run<R: BufRead>(input: R) -> Result<Vec<RunEntry>, RunFileError> {
    let mut checker = Checker::default();
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let bad = |message: String| RunFileError::Line { line: i + 1, message };
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [s, q0, doc, rank, score, tag] = fields[..] else {
            return Err(bad(format!("expected 6 fields, found {}", fields.len())));
        };
        if q0 != "Q0" {
            return Err(bad(format!("second field is {q0:?}, expected Q0")));
        }
        let entry = RunEntry {
            symptom_index: s.parse().map_err(|_| bad(format!("bad symptom {s:?}")))?,
            doc_id: doc.to_string(),
            rank: rank.parse().map_err(|_| bad(format!("bad rank {rank:?}")))?,
            score: score.parse().map_err(|_| bad(format!("bad score {score:?}")))?,
            run_tag: tag.to_string(),
        };
        checker.check(&entry, false).map_err(bad)?;
        out.push(entry);
    }
    Ok(out)
}
