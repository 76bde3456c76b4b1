//! Fixed-dimension unit-vector store with exact cosine top-k search.
//!
//! Scores are `f32`; dot products accumulate in `f64`. Results follow a total
//! order: score descending, then doc id ascending.

mod io;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use crate::exec::Execution;
pub use io::{load_store, read_binary, read_jsonl, write_binary, write_jsonl, MAGIC, VERSION};

/// Vectors whose norm is within this distance of 1 are kept as stored.
const UNIT_SLACK: f64 = 1e-6;
/// Rows scanned per block before merging partial results.
pub const BLOCK_ROWS: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum StoreError {
    #[error("bad magic: expected \"EMB1\"")]
    BadMagic,
    #[error("unsupported embedding file version {0}")]
    UnsupportedVersion(u32),
    #[error("dimension must be positive")]
    ZeroDim,
    #[error("dimension mismatch: expected {expected}, found {found}{}", id.as_ref().map(|i| format!(" (id {i:?})")).unwrap_or_default())]
    DimMismatch {
        expected: usize,
        found: usize,
        id: Option<String>,
    },
    #[error("zero vector for id {0:?}")]
    ZeroVector(String),
    #[error("non-finite component in vector for id {0:?}")]
    NonFinite(String),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("empty id")]
    EmptyId,
    #[error("id longer than 65535 bytes: {0:?}")]
    IdTooLong(String),
    #[error("truncated file at byte {0}")]
    Truncated(usize),
    #[error("invalid UTF-8 id at byte {0}")]
    InvalidId(usize),
    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("line {line}: {message}")]
    Jsonl { line: usize, message: String },
    #[error("query vector is not finite")]
    InvalidQuery,
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
    index: HashMap<String, usize>,
    renormalized: usize,
}

impl PartialEq for EmbeddingStore {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.ids == other.ids
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f32,
}

fn dot64(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum()
}

/// Clamps to [-1, 1] and folds -0.0 into 0.0 so that the total order on
/// scores agrees with numeric equality.
fn to_score(v: f64) -> f32 {
    (v as f32).clamp(-1.0, 1.0) + 0.0
}

/// Cosine similarity. For unit vectors this is their dot product; other
/// inputs are divided by their norms. A zero vector scores 0.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f32, StoreError> {
    if a.len() != b.len() {
        return Err(StoreError::DimMismatch {
            expected: a.len(),
            found: b.len(),
            id: None,
        });
    }
    let na = dot64(a, a).sqrt();
    let nb = dot64(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let d = dot64(a, b);
    if (na - 1.0).abs() <= UNIT_SLACK && (nb - 1.0).abs() <= UNIT_SLACK {
        Ok(to_score(d))
    } else {
        Ok(to_score(d / (na * nb)))
    }
}

/// Returns the unit-length version of `v`, or `v` unchanged when it is
/// already unit length within `UNIT_SLACK`. The flag reports whether
/// rescaling happened.
pub fn normalize(id: &str, v: &[f32]) -> Result<(Vec<f32>, bool), StoreError> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(StoreError::NonFinite(id.to_string()));
    }
    let norm = dot64(v, v).sqrt();
    if norm == 0.0 {
        return Err(StoreError::ZeroVector(id.to_string()));
    }
    if (norm - 1.0).abs() <= UNIT_SLACK {
        return Ok((v.to_vec(), false));
    }
    Ok((v.iter().map(|x| (*x as f64 / norm) as f32).collect(), true))
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self, StoreError> {
        if dim == 0 {
            return Err(StoreError::ZeroDim);
        }
        Ok(EmbeddingStore {
            dim,
            ids: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
            renormalized: 0,
        })
    }

    pub fn from_vectors<I, S, V>(dim: usize, vectors: I) -> Result<Self, StoreError>
    where
        I: IntoIterator<Item = (S, V)>,
        S: Into<String>,
        V: AsRef<[f32]>,
    {
        let mut store = Self::new(dim)?;
        for (id, v) in vectors {
            store.insert(id.into(), v.as_ref())?;
        }
        Ok(store)
    }

    /// Adds a vector, normalizing it to unit length.
    pub fn insert(&mut self, id: String, v: &[f32]) -> Result<(), StoreError> {
        if id.is_empty() {
            return Err(StoreError::EmptyId);
        }
        if v.len() != self.dim {
            return Err(StoreError::DimMismatch {
                expected: self.dim,
                found: v.len(),
                id: Some(id),
            });
        }
        if self.index.contains_key(&id) {
            return Err(StoreError::DuplicateId(id));
        }
        let (unit, rescaled) = normalize(&id, v)?;
        self.renormalized += usize::from(rescaled);
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(&unit);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Number of inserted vectors that were not already unit length.
    pub fn renormalized_count(&self) -> usize {
        self.renormalized
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.index.get(id).map(|&i| self.row(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), self.row(i)))
    }

    /// Exact top-k by cosine. `query` must already be unit length.
    pub fn top_k(
        &self,
        query: &[f32],
        k: usize,
        exec: Execution,
    ) -> Result<Vec<ScoredDoc>, StoreError> {
        if query.len() != self.dim {
            return Err(StoreError::DimMismatch {
                expected: self.dim,
                found: query.len(),
                id: None,
            });
        }
        if query.iter().any(|x| !x.is_finite()) {
            return Err(StoreError::InvalidQuery);
        }
        if k == 0 || self.is_empty() {
            return Ok(Vec::new());
        }
        let starts: Vec<usize> = (0..self.len()).step_by(BLOCK_ROWS).collect();
        let partial = exec.map(&starts, |&start| {
            let end = (start + BLOCK_ROWS).min(self.len());
            self.scan_block(query, start..end, k)
        });
        let mut merged: Vec<Candidate> = partial.into_iter().flatten().collect();
        merged.sort_unstable_by(|a, b| b.cmp(a));
        merged.truncate(k);
        Ok(merged
            .into_iter()
            .map(|c| ScoredDoc {
                doc_id: self.ids[c.row].clone(),
                score: c.score,
            })
            .collect())
    }

    fn scan_block(&self, query: &[f32], rows: std::ops::Range<usize>, k: usize) -> Vec<Candidate<'_>> {
        // Max-heap on "worseness": the top is the weakest retained candidate.
        let mut heap: BinaryHeap<std::cmp::Reverse<Candidate>> = BinaryHeap::with_capacity(k + 1);
        for row in rows {
            let cand = Candidate {
                score: to_score(dot64(self.row(row), query)),
                id: &self.ids[row],
                row,
            };
            if heap.len() < k {
                heap.push(std::cmp::Reverse(cand));
            } else if let Some(worst) = heap.peek() {
                if cand > worst.0 {
                    heap.pop();
                    heap.push(std::cmp::Reverse(cand));
                }
            }
        }
        heap.into_iter().map(|r| r.0).collect()
    }
}

/// Ordered so that "greater" means "ranks higher".
#[derive(Debug, Clone, Copy)]
struct Candidate<'a> {
    score: f32,
    id: &'a str,
    row: usize,
}

impl Ord for Candidate<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.id.cmp(self.id))
    }
}

impl PartialOrd for Candidate<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate<'_> {}

/// Runs [`EmbeddingStore::top_k`] for many queries.
pub fn top_k_batch(
    store: &EmbeddingStore,
    queries: &[&[f32]],
    k: usize,
    exec: Execution,
) -> Result<Vec<Vec<ScoredDoc>>, StoreError> {
    exec.map(queries, |q| store.top_k(q, k, Execution::Sequential))
        .into_iter()
        .collect()
}
