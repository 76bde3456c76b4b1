//! Reader and writer for TREC-style per-user document files.
//!
//! ```text
//! <DOC>
//! <DOCNO>s42</DOCNO>
//! <TEXT>I have not slept properly in weeks.</TEXT>
//! </DOC>
//! ```
//!
//! Tag names are matched case-insensitively. Elements other than DOCNO and
//! TEXT are skipped. `&lt;`, `&gt;`, `&amp;`, `&quot;` and `&apos;` inside
//! TEXT are decoded; the writer encodes `&`, `<` and `>`.

use std::collections::HashSet;

use thiserror::Error;

use super::SentenceRecord;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrecError {
    #[error("invalid UTF-8 at byte {0}")]
    InvalidUtf8(usize),
    #[error("unterminated <DOC> block starting at byte {0}")]
    UnterminatedDoc(usize),
    #[error("unterminated <{tag}> element at byte {offset}")]
    UnterminatedElement { tag: String, offset: usize },
    #[error("<DOC> block at byte {0} has no DOCNO")]
    MissingDocno(usize),
    #[error("invalid DOCNO {docno:?} at byte {offset}")]
    InvalidDocno { docno: String, offset: usize },
    #[error("duplicate DOCNO {docno:?} at byte {offset}")]
    DuplicateDocno { docno: String, offset: usize },
}

const DOC_OPEN: &str = "<doc>";
const DOC_CLOSE: &str = "</doc>";

/// Parses one per-user file. Records come back in file order, all marked kept.
pub fn parse_trec(bytes: &[u8], user_id: &str) -> Result<Vec<SentenceRecord>, TrecError> {
    let text = std::str::from_utf8(bytes).map_err(|e| TrecError::InvalidUtf8(e.valid_up_to()))?;
    // ASCII lowercasing keeps byte offsets aligned with `text`.
    let lower = text.to_ascii_lowercase();
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut pos = 0;

    while let Some(rel) = lower[pos..].find(DOC_OPEN) {
        let start = pos + rel;
        let body_start = start + DOC_OPEN.len();
        let body_end = lower[body_start..]
            .find(DOC_CLOSE)
            .map(|r| body_start + r)
            .ok_or(TrecError::UnterminatedDoc(start))?;

        let mut docno = None;
        let mut body = String::new();
        for (tag, content, offset) in elements(text, &lower, body_start, body_end)? {
            match tag.as_str() {
                "docno" if docno.is_none() => docno = Some((content.trim().to_string(), offset)),
                "text" => {
                    if !body.is_empty() {
                        body.push(' ');
                    }
                    body.push_str(&decode_entities(content.trim()));
                }
                _ => {}
            }
        }
        let (docno, offset) = docno.ok_or(TrecError::MissingDocno(start))?;
        if docno.is_empty() || docno.chars().any(char::is_whitespace) {
            return Err(TrecError::InvalidDocno { docno, offset });
        }
        if !seen.insert(docno.clone()) {
            return Err(TrecError::DuplicateDocno { docno, offset });
        }
        records.push(SentenceRecord {
            doc_id: docno,
            user_id: user_id.to_string(),
            text: body.trim().to_string(),
            kept: true,
        });
        pos = body_end + DOC_CLOSE.len();
    }
    Ok(records)
}

/// Child elements of a DOC body as (lowercase tag, raw content, byte offset).
fn elements<'a>(
    text: &'a str,
    lower: &str,
    mut pos: usize,
    end: usize,
) -> Result<Vec<(String, &'a str, usize)>, TrecError> {
    let mut out = Vec::new();
    while let Some(rel) = lower[pos..end].find('<') {
        let open = pos + rel;
        let Some(close_rel) = lower[open..end].find('>') else {
            return Err(TrecError::UnterminatedElement {
                tag: lower[open + 1..end].trim().to_string(),
                offset: open,
            });
        };
        let gt = open + close_rel;
        let raw_tag = &lower[open + 1..gt];
        if raw_tag.starts_with('/') || raw_tag.starts_with('!') || raw_tag.starts_with('?') {
            pos = gt + 1;
            continue;
        }
        if raw_tag.ends_with('/') {
            let name = raw_tag.trim_end_matches('/').trim().to_string();
            out.push((name, "", open));
            pos = gt + 1;
            continue;
        }
        let name = raw_tag.split_whitespace().next().unwrap_or("").to_string();
        let closing = format!("</{name}>");
        let content_start = gt + 1;
        let Some(c_rel) = lower[content_start..end].find(&closing) else {
            return Err(TrecError::UnterminatedElement { tag: name, offset: open });
        };
        let content_end = content_start + c_rel;
        out.push((name, &text[content_start..content_end], open));
        pos = content_end + closing.len();
    }
    Ok(out)
}

fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        let table = [
            ("&lt;", '<'),
            ("&gt;", '>'),
            ("&amp;", '&'),
            ("&quot;", '"'),
            ("&apos;", '\''),
        ];
        match table.iter().find(|(e, _)| rest.starts_with(e)) {
            Some((e, c)) => {
                out.push(*c);
                rest = &rest[e.len()..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn encode_entities(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Writes records in the layout [`parse_trec`] reads.
pub fn write_trec(records: &[SentenceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str("<DOC>\n<DOCNO>");
        out.push_str(&r.doc_id);
        out.push_str("</DOCNO>\n<TEXT>");
        out.push_str(&encode_entities(&r.text));
        out.push_str("</TEXT>\n</DOC>\n");
    }
    out
}
