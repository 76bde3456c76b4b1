//! Corpus ingestion: per-user TREC files in, a cleaned canonical corpus out.

pub mod lang;
pub mod trec;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use crate::exec::Execution;
use crate::tsv;
pub use lang::{
    AcceptAll, AcceptEither, DetectorError, ExternalDetector, LanguageDetector, StopwordDetector, DEFAULT_STOPWORD_RATE,
};
pub use trec::{parse_trec, write_trec, TrecError};

/// Sentences with fewer tokens than this after URL stripping are dropped.
pub const MIN_TOKENS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceRecord {
    pub doc_id: String,
    pub user_id: String,
    pub text: String,
    pub kept: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub users: usize,
    pub sentences_total: usize,
    pub sentences_kept: usize,
    pub dropped_non_english: usize,
    pub dropped_empty: usize,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "users = {}", self.users)?;
        writeln!(f, "sentences_total = {}", self.sentences_total)?;
        writeln!(f, "sentences_kept = {}", self.sentences_kept)?;
        writeln!(f, "dropped_non_english = {}", self.dropped_non_english)?;
        writeln!(f, "dropped_empty = {}", self.dropped_empty)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Trec {
        path: PathBuf,
        #[source]
        source: TrecError,
    },
    #[error("doc_id {doc_id:?} appears for users {first} and {second}")]
    DuplicateDocId {
        doc_id: String,
        first: String,
        second: String,
    },
    #[error("corpus line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Detector(#[from] DetectorError),
}

fn url_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(?:https?://|\bwww\.)\S*").expect("valid URL pattern"))
}

/// Removes `http://`, `https://` and `www.` URLs (up to the next whitespace)
/// and collapses the remaining whitespace to single spaces.
pub fn strip_urls(text: &str) -> String {
    let without = url_pattern().replace_all(text, " ");
    without.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn is_english(text: &str, detector: &dyn LanguageDetector) -> bool {
    detector.is_english(text)
}

/// Strips URLs from every record, then marks it kept iff it still has at
/// least [`MIN_TOKENS`] tokens and the detector classifies it as English.
///
/// `stats.users` counts distinct user ids among the input records.
pub fn preprocess_corpus(
    records: Vec<SentenceRecord>,
    detector: &dyn LanguageDetector,
    exec: Execution,
) -> Result<(Vec<SentenceRecord>, CorpusStats), DetectorError> {
    let mut records = records;
    let stripped = exec.map(&records, |r| strip_urls(&r.text));
    let long_enough: Vec<bool> = stripped
        .iter()
        .map(|t| t.split_whitespace().count() >= MIN_TOKENS)
        .collect();
    let to_check: Vec<&str> = stripped
        .iter()
        .zip(&long_enough)
        .filter(|(_, ok)| **ok)
        .map(|(t, _)| t.as_str())
        .collect();
    let mut verdicts = detector.classify_batch(&to_check)?.into_iter();

    let mut stats = CorpusStats {
        sentences_total: records.len(),
        ..CorpusStats::default()
    };
    let mut users = std::collections::HashSet::new();
    for ((rec, text), ok) in records.iter_mut().zip(stripped).zip(long_enough) {
        users.insert(rec.user_id.clone());
        rec.text = text;
        rec.kept = if !ok {
            stats.dropped_empty += 1;
            false
        } else if verdicts.next().expect("one verdict per checked text") {
            stats.sentences_kept += 1;
            true
        } else {
            stats.dropped_non_english += 1;
            false
        };
    }
    stats.users = users.len();
    Ok((records, stats))
}

/// Parses every regular file in `dir` (sorted by name; the file stem is the
/// user id) and checks doc_id uniqueness across users.
pub fn read_corpus_dir(dir: &Path, exec: Execution) -> Result<Vec<SentenceRecord>, CorpusError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| {
            !p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with('.'))
        })
        .collect();
    files.sort();

    let parsed = exec.map(&files, |path| -> Result<Vec<SentenceRecord>, CorpusError> {
        let bytes = fs::read(path).map_err(io_err(path))?;
        let user = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        parse_trec(&bytes, &user).map_err(|source| CorpusError::Trec {
            path: path.clone(),
            source,
        })
    });

    let mut owner: HashMap<String, String> = HashMap::new();
    let mut all = Vec::new();
    for batch in parsed {
        for rec in batch? {
            if let Some(first) = owner.insert(rec.doc_id.clone(), rec.user_id.clone()) {
                return Err(CorpusError::DuplicateDocId {
                    doc_id: rec.doc_id,
                    first,
                    second: rec.user_id,
                });
            }
            all.push(rec);
        }
    }
    Ok(all)
}

/// Canonical corpus: `doc_id \t user_id \t kept(0|1) \t text` per line.
pub fn write_canonical<W: Write>(records: &[SentenceRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.doc_id,
            r.user_id,
            u8::from(r.kept),
            tsv::escape(&r.text)
        )?;
    }
    out.flush()
}

pub fn read_canonical<R: BufRead>(input: R) -> Result<Vec<SentenceRecord>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        if line.is_empty() {
            continue;
        }
        let bad = |message: &str| CorpusError::Malformed {
            line: lineno,
            message: message.to_string(),
        };
        let mut cols = line.splitn(4, '\t');
        let (Some(doc_id), Some(user_id), Some(kept), Some(text)) =
            (cols.next(), cols.next(), cols.next(), cols.next())
        else {
            return Err(bad("expected 4 tab-separated columns"));
        };
        if doc_id.is_empty() {
            return Err(bad("empty doc_id"));
        }
        let kept = match kept {
            "0" => false,
            "1" => true,
            _ => return Err(bad("kept must be 0 or 1")),
        };
        let text = tsv::unescape(text).map_err(|m| bad(&m))?;
        out.push(SentenceRecord {
            doc_id: doc_id.to_string(),
            user_id: user_id.to_string(),
            text,
            kept,
        });
    }
    Ok(out)
}
