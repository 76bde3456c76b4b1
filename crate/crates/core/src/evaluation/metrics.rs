//! Binary-relevance ranking metrics. Documents outside `relevant` (including
//! unjudged ones) count as non-relevant; a document repeated in a ranking only
//! counts at its first position.

use std::collections::{BTreeSet, HashSet};

use super::EvalError;

fn relevance_flags<S: AsRef<str>>(ranking: &[S], relevant: &BTreeSet<String>) -> Vec<bool> {
    let mut seen = HashSet::with_capacity(ranking.len());
    ranking
        .iter()
        .map(|d| {
            let d = d.as_ref();
            seen.insert(d) && relevant.contains(d)
        })
        .collect()
}

fn require_relevant(relevant: &BTreeSet<String>) -> Result<f64, EvalError> {
    if relevant.is_empty() {
        return Err(EvalError::NoRelevant);
    }
    Ok(relevant.len() as f64)
}

pub fn average_precision<S: AsRef<str>>(
    ranking: &[S],
    relevant: &BTreeSet<String>,
) -> Result<f64, EvalError> {
    let r = require_relevant(relevant)?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, rel) in relevance_flags(ranking, relevant).into_iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Ok(sum / r)
}

pub fn r_precision<S: AsRef<str>>(
    ranking: &[S],
    relevant: &BTreeSet<String>,
) -> Result<f64, EvalError> {
    let r = require_relevant(relevant)?;
    let flags = relevance_flags(ranking, relevant);
    let hits = flags.iter().take(relevant.len()).filter(|&&x| x).count();
    Ok(hits as f64 / r)
}

/// Precision with a fixed denominator `n`, even for shorter rankings.
pub fn precision_at<S: AsRef<str>>(
    ranking: &[S],
    relevant: &BTreeSet<String>,
    n: usize,
) -> Result<f64, EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroCutoff);
    }
    let flags = relevance_flags(ranking, relevant);
    let hits = flags.iter().take(n).filter(|&&x| x).count();
    Ok(hits as f64 / n as f64)
}

fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

/// NDCG with binary gains and a `log2(rank + 1)` discount.
pub fn ndcg_at<S: AsRef<str>>(
    ranking: &[S],
    relevant: &BTreeSet<String>,
    n: usize,
) -> Result<f64, EvalError> {
    require_relevant(relevant)?;
    if n == 0 {
        return Err(EvalError::ZeroCutoff);
    }
    let dcg: f64 = relevance_flags(ranking, relevant)
        .into_iter()
        .take(n)
        .enumerate()
        .filter(|(_, rel)| *rel)
        .map(|(i, _)| discount(i + 1))
        .sum();
    let idcg: f64 = (1..=relevant.len().min(n)).map(discount).sum();
    Ok(dcg / idcg)
}
