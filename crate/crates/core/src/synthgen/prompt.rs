use thiserror::Error;

use crate::questionnaire::{ResponseOption, Symptom};

pub const PLACEHOLDERS: [&str; 3] = ["{N}", "{symptom}", "{item}"];

/// Instruction prompt asking for `{N}` Reddit-style posts that express the
/// answer `{item}` of the `{symptom}` item.
pub const DEFAULT_TEMPLATE: &str = r#"You are asked to come up with a set of "{N}" diverse reddit posts that are examples to the BDI depression questionnaire for the "{symptom}" symptom. For this symptom, the BDI answer of interest is "{item}".
These examples will be given to a ranking model that will compute the similarity between the answer item text and the reddit post.

Here are the requirements:
1. The language used for the reddit posts should be diverse. For example, you should combine descriptions of past experiences with feelings or events.
2. The reddit posts should be in English.
3. The reddit posts should be 2 to 3 sentences long.
4. The reddit posts should provide substantial content to make ranking feasible.
5. The reddit posts should be specific and not just describe general situations, but rather specific personal experiences and self-disclosure.
6. The reddit posts should, as much as possible, not contain the exact words of the BDI item.

List of "{N}" reddit posts:"#;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("template is missing placeholder {0}")]
    MissingPlaceholder(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    template: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            template: DEFAULT_TEMPLATE.to_string(),
        }
    }
}

impl PromptTemplate {
    pub fn new(template: impl Into<String>) -> Result<Self, PromptError> {
        let template = template.into();
        for p in PLACEHOLDERS {
            if !template.contains(p) {
                return Err(PromptError::MissingPlaceholder(p));
            }
        }
        Ok(PromptTemplate { template })
    }

    pub fn as_str(&self) -> &str {
        &self.template
    }
}

/// Fills the template in a single pass, so substituted values are never
/// themselves expanded.
pub fn build_prompt(
    template: &PromptTemplate,
    n: usize,
    symptom: &Symptom,
    option: &ResponseOption,
) -> String {
    let n = n.to_string();
    let values = [n.as_str(), symptom.name.as_str(), option.text.as_str()];
    let mut out = String::with_capacity(template.template.len() + 64);
    let mut rest = template.template.as_str();
    'outer: while let Some(i) = rest.find('{') {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        for (p, v) in PLACEHOLDERS.iter().zip(values) {
            if let Some(after) = rest.strip_prefix(p) {
                out.push_str(v);
                rest = after;
                continue 'outer;
            }
        }
        out.push('{');
        rest = &rest[1..];
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sadness() -> (Symptom, ResponseOption) {
        let opt = ResponseOption {
            symptom_index: 1,
            option_index: 0,
            text: "I do not feel sad.".into(),
        };
        (
            Symptom {
                index: 1,
                name: "Sadness".into(),
                options: vec![opt.clone()],
            },
            opt,
        )
    }

    #[test]
    fn fills_all_placeholders() {
        let (s, o) = sadness();
        let p = build_prompt(&PromptTemplate::default(), 30, &s, &o);
        assert!(p.contains(r#""30" diverse reddit posts"#));
        assert!(p.contains(r#""Sadness" symptom"#));
        assert!(p.contains(r#""I do not feel sad.""#));
        assert!(p.ends_with(r#"List of "30" reddit posts:"#));
        assert!(PLACEHOLDERS.iter().all(|ph| !p.contains(ph)));
        assert!(p.contains("3. The reddit posts should be 2 to 3 sentences long."));
    }

    #[test]
    fn single_post_prompt() {
        let (s, o) = sadness();
        let p = build_prompt(&PromptTemplate::default(), 1, &s, &o);
        assert!(p.contains(r#""1" diverse reddit posts"#));
    }

    #[test]
    fn template_without_item_rejected() {
        assert_eq!(
            PromptTemplate::new("give {N} posts for {symptom}"),
            Err(PromptError::MissingPlaceholder("{item}"))
        );
    }

    #[test]
    fn values_are_not_reexpanded() {
        let (s, mut o) = sadness();
        o.text = "literal {symptom} braces {".into();
        let t = PromptTemplate::new("[{item}] {N} {symptom}").unwrap();
        assert_eq!(build_prompt(&t, 2, &s, &o), "[literal {symptom} braces {] 2 Sadness");
    }
}
