use std::sync::OnceLock;

use regex::Regex;

fn enumeration() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\d+[.)]\s+").expect("valid pattern"))
}

const QUOTE_PAIRS: [(char, char); 4] = [('"', '"'), ('\'', '\''), ('\u{201C}', '\u{201D}'), ('\u{2018}', '\u{2019}')];

/// Splits a raw completion into individual texts: one per non-empty line,
/// with leading enumeration markers (`12.` or `12)` plus space) and
/// surrounding quote pairs removed. Stripping repeats until nothing changes,
/// which makes the function idempotent.
pub fn postprocess_completion(raw: &str) -> Vec<String> {
    raw.lines().filter_map(clean_line).collect()
}

fn is_bare_marker(s: &str) -> bool {
    s.len() > 1
        && (s.ends_with('.') || s.ends_with(')'))
        && s[..s.len() - 1].bytes().all(|b| b.is_ascii_digit())
}

fn clean_line(line: &str) -> Option<String> {
    let mut s = line.trim();
    loop {
        if is_bare_marker(s) {
            return None;
        }
        let before = s;
        if let Some(m) = enumeration().find(s) {
            s = s[m.end()..].trim();
        }
        for (open, close) in QUOTE_PAIRS {
            if s.chars().count() >= 2 && s.starts_with(open) && s.ends_with(close) {
                s = s[open.len_utf8()..s.len() - close.len_utf8()].trim();
                break;
            }
        }
        if s == before {
            break;
        }
    }
    (!s.is_empty()).then(|| s.to_string())
}
