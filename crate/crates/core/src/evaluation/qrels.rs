//! Qrels files in two layouts:
//!
//! - extended: `symptom doc_id l1 l2 l3`, one binary label per annotator;
//! - standard: `symptom 0 doc_id rel`, read with the label replicated three
//!   times so both aggregation modes agree with it.
//!
//! The layout is detected from the column count of the first non-blank line.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use thiserror::Error;

use super::{AggregationMode, Judgment};
use crate::questionnaire::SYMPTOM_COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrelsFormat {
    Extended,
    Standard,
}

#[derive(Debug, Error)]
pub enum QrelsError {
    #[error("qrels line {line}: {message}")]
    Line { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn label(s: &str) -> Result<bool, String> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(format!("label {other:?} is not 0 or 1")),
    }
}

pub fn read_qrels<R: BufRead>(input: R) -> Result<(QrelsFormat, Vec<Judgment>), QrelsError> {
    let mut format = None;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let bad = |message: String| QrelsError::Line { line: i + 1, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let this = match fields.len() {
            5 => QrelsFormat::Extended,
            4 => QrelsFormat::Standard,
            n => return Err(bad(format!("expected 4 or 5 fields, found {n}"))),
        };
        if *format.get_or_insert(this) != this {
            return Err(bad("mixes standard and extended qrels lines".into()));
        }
        let (s, doc, labels) = match fields[..] {
            [s, doc, a, b, c] => (s, doc, [label(a), label(b), label(c)]),
            [s, _, doc, rel] => {
                let rel: u32 = rel.parse().map_err(|_| bad(format!("bad relevance {rel:?}")))?;
                (s, doc, [Ok(rel > 0), Ok(rel > 0), Ok(rel > 0)])
            }
            _ => unreachable!("field count checked above"),
        };
        let symptom_index: u8 = s.parse().map_err(|_| bad(format!("bad symptom {s:?}")))?;
        if !(1..=SYMPTOM_COUNT as u8).contains(&symptom_index) {
            return Err(bad(format!("symptom {symptom_index} outside 1..={SYMPTOM_COUNT}")));
        }
        let [a, b, c] = labels;
        let labels = [a.map_err(&bad)?, b.map_err(&bad)?, c.map_err(&bad)?];
        if !seen.insert((symptom_index, doc.to_string())) {
            return Err(bad(format!("doc {doc} judged twice for symptom {symptom_index}")));
        }
        out.push(Judgment {
            symptom_index,
            doc_id: doc.to_string(),
            labels,
        });
    }
    Ok((format.unwrap_or(QrelsFormat::Extended), out))
}

pub fn write_qrels_extended<W: Write>(judgments: &[Judgment], mut out: W) -> std::io::Result<()> {
    for j in judgments {
        let [a, b, c] = j.labels.map(u8::from);
        writeln!(out, "{} {} {a} {b} {c}", j.symptom_index, j.doc_id)?;
    }
    out.flush()
}

/// Writes the aggregated relevance under `mode`; annotator detail is lost.
pub fn write_qrels_standard<W: Write>(
    judgments: &[Judgment],
    mode: AggregationMode,
    mut out: W,
) -> std::io::Result<()> {
    for j in judgments {
        let rel = u8::from(mode.is_relevant(&j.labels));
        writeln!(out, "{} 0 {} {rel}", j.symptom_index, j.doc_id)?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn detects_layouts() {
        let (f, j) = read_qrels("3 s1 1 1 0\n3 s2 0 0 0\n".as_bytes()).unwrap();
        assert_eq!(f, QrelsFormat::Extended);
        assert_eq!(j[0].labels, [true, true, false]);
        let (f, j) = read_qrels("3 0 s1 1\n\n3 0 s2 0\n".as_bytes()).unwrap();
        assert_eq!(f, QrelsFormat::Standard);
        assert_eq!(j[0].labels, [true; 3]);
        assert_eq!(j[1].labels, [false; 3]);
    }

    #[test]
    fn rejects_bad_lines() {
        let line_of = |t: &str| match read_qrels(t.as_bytes()) {
            Err(QrelsError::Line { line, .. }) => line,
            other => panic!("{other:?}"),
        };
        assert_eq!(line_of("3 s1 1 1 0\n3 0 s2 1\n"), 2);
        assert_eq!(line_of("3 s1 1 2 0\n"), 1);
        assert_eq!(line_of("3 s1 1 1 0 9\n"), 1);
        assert_eq!(line_of("22 s1 1 1 0\n"), 1);
        assert_eq!(line_of("3 s1 1 1 0\n3 s1 0 0 0\n"), 2);
        assert_eq!(line_of("3 0 s1 x\n"), 1);
    }

    fn arb_judgments() -> impl Strategy<Value = Vec<Judgment>> {
        proptest::collection::btree_map((1u8..=21, "[a-z0-9_-]{1,12}"), any::<[bool; 3]>(), 0..60)
            .prop_map(|m| {
                m.into_iter()
                    .map(|((symptom_index, doc_id), labels)| Judgment {
                        symptom_index,
                        doc_id,
                        labels,
                    })
                    .collect()
            })
    }

    proptest! {
        #[test]
        fn extended_round_trip(judgments in arb_judgments()) {
            let mut buf = Vec::new();
            write_qrels_extended(&judgments, &mut buf).unwrap();
            let (_, back) = read_qrels(&buf[..]).unwrap();
            prop_assert_eq!(back, judgments);
        }

        #[test]
        fn standard_round_trip_on_replicated_labels(judgments in arb_judgments()) {
            let judgments: Vec<_> = judgments
                .into_iter()
                .map(|j| Judgment { labels: [j.labels[0]; 3], ..j })
                .collect();
            let mut buf = Vec::new();
            write_qrels_standard(&judgments, AggregationMode::Majority, &mut buf).unwrap();
            let (_, back) = read_qrels(&buf[..]).unwrap();
            prop_assert_eq!(back, judgments);
        }
    }
}
