//! Language detection behind a pluggable interface.
//!
//! The default [`StopwordDetector`] is a self-contained heuristic: a text is
//! English when its letters are overwhelmingly Latin-ASCII, at least 15% of
//! its tokens are English function words, and no competing language's
//! function-word table scores more hits than English does.

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use thiserror::Error;

use crate::exec::Execution;

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("external detector `{program}` failed: {message}")]
    External { program: String, message: String },
}

pub trait LanguageDetector: Sync {
    fn is_english(&self, text: &str) -> bool;

    fn classify_batch(&self, texts: &[&str]) -> Result<Vec<bool>, DetectorError> {
        Ok(Execution::default().map(texts, |t| self.is_english(t)))
    }
}

pub const DEFAULT_STOPWORD_RATE: f64 = 0.15;
const MIN_ASCII_LETTER_SHARE: f64 = 0.9;

const ENGLISH: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "as", "at", "be", "because", "been", "before", "being", "below", "between", "both", "but",
    "by", "can", "can't", "cannot", "could", "did", "didn't", "do", "does", "doesn't", "doing",
    "don't", "down", "during", "each", "even", "ever", "every", "few", "for", "from", "further",
    "get", "got", "had", "has", "have", "having", "he", "her", "here", "hers", "herself", "him",
    "himself", "his", "how", "i", "i'm", "i've", "if", "in", "into", "is", "isn't", "it", "it's",
    "its", "itself", "just", "like", "me", "more", "most", "much", "my", "myself", "never", "no",
    "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "out",
    "over", "own", "really", "same", "she", "should", "so", "some", "such", "than", "that",
    "the", "their", "them", "then", "there", "these", "they", "this", "those", "through", "time",
    "to", "too", "under", "until", "up", "very", "was", "wasn't", "we", "were", "what", "when",
    "where", "which", "while", "who", "why", "will", "with", "won't", "would", "you", "your",
];

const SPANISH: &[&str] = &[
    "a", "al", "algo", "como", "con", "de", "del", "el", "ella", "en", "es", "esta", "estoy",
    "la", "las", "le", "lo", "los", "me", "mi", "muy", "no", "para", "pero", "por", "que", "se",
    "si", "siempre", "sin", "su", "tengo", "todo", "todos", "un", "una", "y", "ya", "yo",
];

const FRENCH: &[&str] = &[
    "au", "avec", "ce", "ces", "dans", "de", "des", "du", "elle", "en", "est", "et", "je", "la",
    "le", "les", "leur", "mais", "me", "mes", "moi", "mon", "ne", "nous", "pas", "plus", "pour",
    "qui", "que", "sa", "se", "son", "sur", "tout", "tu", "un", "une", "vous",
];

const GERMAN: &[&str] = &[
    "auch", "auf", "aus", "bin", "das", "dem", "den", "der", "die", "ein", "eine", "es", "gut",
    "habe", "ich", "immer", "in", "ist", "mich", "mir", "mit", "nicht", "noch", "nur", "sehr",
    "sich", "sie", "und", "war", "wie", "wir", "zu",
];

const ITALIAN: &[&str] = &[
    "che", "con", "da", "del", "della", "di", "e", "gli", "il", "io", "la", "le", "lo", "ma",
    "mi", "mio", "non", "per", "piu", "sono", "su", "tutto", "un", "una", "sempre",
];

const PORTUGUESE: &[&str] = &[
    "com", "da", "de", "do", "ele", "em", "estou", "eu", "isso", "mais", "mas", "me", "meu",
    "muito", "na", "nao", "no", "o", "os", "para", "por", "que", "se", "sempre", "tempo", "um",
    "uma", "tudo",
];

const DUTCH: &[&str] = &[
    "aan", "als", "bij", "dat", "de", "die", "dit", "een", "en", "het", "hij", "ik", "is", "maar",
    "met", "mij", "niet", "nog", "op", "te", "van", "voor", "wat", "ze", "zijn",
];

const COMPETITORS: &[&[&str]] = &[SPANISH, FRENCH, GERMAN, ITALIAN, PORTUGUESE, DUTCH];

/// Function-word and character-profile heuristic.
#[derive(Debug, Clone)]
pub struct StopwordDetector {
    min_rate: f64,
}

impl Default for StopwordDetector {
    fn default() -> Self {
        StopwordDetector {
            min_rate: DEFAULT_STOPWORD_RATE,
        }
    }
}

impl StopwordDetector {
    /// Lower rates accept a superset of what higher rates accept.
    pub fn with_min_rate(min_rate: f64) -> Self {
        StopwordDetector { min_rate }
    }
}

pub(crate) fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphabetic() || c == '\'' || c == '\u{2019}'))
        .map(|t| t.trim_matches(|c| c == '\'' || c == '\u{2019}'))
        .filter(|t| !t.is_empty())
        .map(|t| t.replace('\u{2019}', "'").to_lowercase())
        .collect()
}

impl LanguageDetector for StopwordDetector {
    fn is_english(&self, text: &str) -> bool {
        let letters: Vec<char> = text.chars().filter(|c| c.is_alphabetic()).collect();
        if letters.is_empty() {
            log::debug!("language detection on text without letters: {text:?}");
            return false;
        }
        let ascii = letters.iter().filter(|c| c.is_ascii_alphabetic()).count();
        if (ascii as f64) / (letters.len() as f64) < MIN_ASCII_LETTER_SHARE {
            return false;
        }
        let toks = tokens(text);
        if toks.is_empty() {
            return false;
        }
        let hits = |table: &[&str]| toks.iter().filter(|t| table.contains(&t.as_str())).count();
        let english = hits(ENGLISH);
        if (english as f64) / (toks.len() as f64) < self.min_rate {
            return false;
        }
        COMPETITORS.iter().all(|table| hits(table) <= english)
    }
}

/// Accepts everything. Useful to disable filtering.
#[derive(Debug, Clone, Copy, Default)]
pub struct AcceptAll;

impl LanguageDetector for AcceptAll {
    fn is_english(&self, _text: &str) -> bool {
        true
    }
}

/// Accepts a text when either detector does.
#[derive(Debug, Clone)]
pub struct AcceptEither<A, B>(pub A, pub B);

impl<A: LanguageDetector, B: LanguageDetector> LanguageDetector for AcceptEither<A, B> {
    fn is_english(&self, text: &str) -> bool {
        self.0.is_english(text) || self.1.is_english(text)
    }
}

/// Delegates to a subprocess.
///
/// Protocol: the program receives one text per line on stdin (newlines inside
/// a text are replaced by spaces) and must print exactly one language code per
/// line on stdout, in order. A text is English iff its code is `en` or
/// `english` (case-insensitive).
#[derive(Debug, Clone)]
pub struct ExternalDetector {
    program: String,
    args: Vec<String>,
}

impl ExternalDetector {
    /// Splits `command` on whitespace into program and arguments (no shell).
    pub fn from_command(command: &str) -> Option<Self> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts.next()?;
        Some(ExternalDetector {
            program,
            args: parts.collect(),
        })
    }

    fn run(&self, texts: &[&str]) -> Result<Vec<bool>, DetectorError> {
        let fail = |message: String| DetectorError::External {
            program: self.program.clone(),
            message,
        };
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| fail(e.to_string()))?;

        let mut stdin = child.stdin.take().expect("stdin piped");
        let payload: String = texts
            .iter()
            .map(|t| format!("{}\n", t.replace(['\n', '\r'], " ")))
            .collect();
        let writer = std::thread::spawn(move || stdin.write_all(payload.as_bytes()));

        let stdout = child.stdout.take().expect("stdout piped");
        let mut answers = Vec::with_capacity(texts.len());
        for line in BufReader::new(stdout).lines() {
            let line = line.map_err(|e| fail(e.to_string()))?;
            let code = line.trim().to_ascii_lowercase();
            answers.push(code == "en" || code == "english");
        }
        writer
            .join()
            .map_err(|_| fail("stdin writer panicked".into()))?
            .map_err(|e| fail(format!("writing stdin: {e}")))?;
        let status = child.wait().map_err(|e| fail(e.to_string()))?;
        if !status.success() {
            return Err(fail(format!("exited with {status}")));
        }
        if answers.len() != texts.len() {
            return Err(fail(format!(
                "expected {} answers, got {}",
                texts.len(),
                answers.len()
            )));
        }
        Ok(answers)
    }
}

impl LanguageDetector for ExternalDetector {
    fn is_english(&self, text: &str) -> bool {
        match self.run(&[text]) {
            Ok(v) => v[0],
            Err(e) => {
                log::warn!("{e}; treating text as non-English");
                false
            }
        }
    }

    fn classify_batch(&self, texts: &[&str]) -> Result<Vec<bool>, DetectorError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        self.run(texts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn english_sentence_accepted() {
        assert!(StopwordDetector::default().is_english("I feel sad all the time."));
        assert!(StopwordDetector::default().is_english("I can't sleep at night anymore."));
    }

    #[test]
    fn spanish_sentence_rejected() {
        // en hits: "me" (1 of 6, rate 0.167); es hits: me, todo, el (3) -> not English
        let d = StopwordDetector::default();
        assert!(!d.is_english("Me siento triste todo el tiempo."));
        assert!(!d.is_english("Je suis triste tout le temps."));
        assert!(!d.is_english("Ich bin immer sehr müde und traurig."));
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let d = StopwordDetector::default();
        assert!(!d.is_english(""));
        assert!(!d.is_english("12345 !!!"));
        assert!(!d.is_english("Мне очень грустно всё время"));
    }

    #[test]
    fn tokenizer_keeps_contractions() {
        assert_eq!(tokens("I don’t know, 'really'."), vec!["i", "don't", "know", "really"]);
    }

    #[test]
    fn either_is_superset() {
        let strict = StopwordDetector::with_min_rate(0.9);
        let relaxed = AcceptEither(strict.clone(), StopwordDetector::default());
        let text = "I feel sad all the time.";
        assert!(!strict.is_english(text));
        assert!(relaxed.is_english(text));
        assert!(AcceptAll.is_english("xyz"));
    }

    #[cfg(unix)]
    #[test]
    fn external_detector_protocol() {
        use std::os::unix::fs::PermissionsExt;
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("detect.sh");
        std::fs::write(
            &script,
            "#!/bin/sh\nwhile IFS= read -r line; do case \"$line\" in *the*) echo en;; *) echo es;; esac; done\n",
        )
        .unwrap();
        std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
        let det = ExternalDetector::from_command(script.to_str().unwrap()).unwrap();
        let got = det
            .classify_batch(&["all the time", "todo el tiempo", "the\nend"])
            .unwrap();
        assert_eq!(got, vec![true, false, true]);
        assert!(det.is_english("the"));

        let missing = ExternalDetector::from_command("/nonexistent/detector").unwrap();
        assert!(missing.classify_batch(&["x"]).is_err());
        assert!(!missing.is_english("the"));
    }
}
