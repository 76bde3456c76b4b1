//! The 21-item depression questionnaire: symptoms and their graded response
//! options.
//!
//! File schema (TOML), one `[[symptom]]` table per item:
//!
//! ```toml
//! [[symptom]]
//! index = 1
//! name = "Sadness"
//! options = ["option 0 (absence)", "option 1", "option 2", "option 3"]
//! ```
//!
//! Parsing is strict: unknown keys are rejected, indices must cover 1..=21
//! exactly once, items 16 and 18 carry seven options and every other item four.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SYMPTOM_COUNT: usize = 21;
pub const TOTAL_OPTIONS: usize = 90;
/// Items whose answer scale distinguishes direction (more/less), giving seven
/// options instead of four.
pub const SEVEN_OPTION_ITEMS: [u8; 2] = [16, 18];

const FIXTURE: &str = include_str!("../data/questionnaire.toml");

#[derive(Debug, Error)]
pub enum QuestionnaireError {
    #[error("cannot read questionnaire file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed questionnaire file: {0}")]
    Malformed(String),
    #[error("expected {SYMPTOM_COUNT} symptoms, found {0}")]
    SymptomCount(usize),
    #[error("symptom index {0} is outside 1..={SYMPTOM_COUNT}")]
    IndexOutOfRange(i64),
    #[error("symptom {0} appears more than once")]
    DuplicateIndex(u8),
    #[error("symptom {symptom}: expected {expected} options, found {found}")]
    OptionCount {
        symptom: u8,
        expected: usize,
        found: usize,
    },
    #[error("symptom {0}: name is empty")]
    EmptyName(u8),
    #[error("symptom {symptom}: option {option} is empty")]
    EmptyOption { symptom: u8, option: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseOption {
    pub symptom_index: u8,
    /// 0 is the absence of the symptom; higher values are more severe (or,
    /// for the seven-option items, alternate directions of the same grade).
    pub option_index: u8,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symptom {
    pub index: u8,
    pub name: String,
    pub options: Vec<ResponseOption>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Questionnaire {
    symptoms: Vec<Symptom>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDoc {
    symptom: Vec<SymptomRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SymptomRecord {
    index: i64,
    name: String,
    options: Vec<String>,
}

pub fn expected_option_count(index: u8) -> usize {
    if SEVEN_OPTION_ITEMS.contains(&index) {
        7
    } else {
        4
    }
}

/// Reads and validates a questionnaire file.
pub fn load_questionnaire(path: &Path) -> Result<Questionnaire, QuestionnaireError> {
    let text = fs::read_to_string(path).map_err(|source| QuestionnaireError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Questionnaire::parse(&text)
}

/// Every response option in (symptom, option) order.
pub fn all_response_options(q: &Questionnaire) -> Vec<&ResponseOption> {
    q.symptoms.iter().flat_map(|s| s.options.iter()).collect()
}

impl Questionnaire {
    /// The bundled placeholder fixture (correct shape, paraphrased wording).
    pub fn fixture() -> Questionnaire {
        Questionnaire::parse(FIXTURE).expect("bundled questionnaire fixture is valid")
    }

    pub fn parse(text: &str) -> Result<Questionnaire, QuestionnaireError> {
        let doc: FileDoc =
            toml::from_str(text).map_err(|e| QuestionnaireError::Malformed(e.to_string()))?;
        Self::from_records(doc.symptom)
    }

    fn from_records(mut records: Vec<SymptomRecord>) -> Result<Questionnaire, QuestionnaireError> {
        if records.len() != SYMPTOM_COUNT {
            return Err(QuestionnaireError::SymptomCount(records.len()));
        }
        let mut seen = [false; SYMPTOM_COUNT + 1];
        for r in &records {
            if !(1..=SYMPTOM_COUNT as i64).contains(&r.index) {
                return Err(QuestionnaireError::IndexOutOfRange(r.index));
            }
            let idx = r.index as usize;
            if seen[idx] {
                return Err(QuestionnaireError::DuplicateIndex(idx as u8));
            }
            seen[idx] = true;
        }
        records.sort_by_key(|r| r.index);

        let mut symptoms = Vec::with_capacity(SYMPTOM_COUNT);
        for r in records {
            let index = r.index as u8;
            let expected = expected_option_count(index);
            if r.options.len() != expected {
                return Err(QuestionnaireError::OptionCount {
                    symptom: index,
                    expected,
                    found: r.options.len(),
                });
            }
            let name = r.name.trim().to_string();
            if name.is_empty() {
                return Err(QuestionnaireError::EmptyName(index));
            }
            let options = r
                .options
                .into_iter()
                .enumerate()
                .map(|(i, text)| {
                    let text = text.trim().to_string();
                    if text.is_empty() {
                        Err(QuestionnaireError::EmptyOption {
                            symptom: index,
                            option: i as u8,
                        })
                    } else {
                        Ok(ResponseOption {
                            symptom_index: index,
                            option_index: i as u8,
                            text,
                        })
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            symptoms.push(Symptom {
                index,
                name,
                options,
            });
        }
        Ok(Questionnaire { symptoms })
    }

    /// Serializes back to the file schema.
    pub fn to_toml(&self) -> String {
        let doc = FileDoc {
            symptom: self
                .symptoms
                .iter()
                .map(|s| SymptomRecord {
                    index: s.index as i64,
                    name: s.name.clone(),
                    options: s.options.iter().map(|o| o.text.clone()).collect(),
                })
                .collect(),
        };
        toml::to_string(&doc).expect("questionnaire serializes")
    }

    pub fn symptoms(&self) -> &[Symptom] {
        &self.symptoms
    }

    pub fn symptom(&self, index: u8) -> Option<&Symptom> {
        index
            .checked_sub(1)
            .and_then(|i| self.symptoms.get(i as usize))
    }

    pub fn option(&self, symptom_index: u8, option_index: u8) -> Option<&ResponseOption> {
        self.symptom(symptom_index)
            .and_then(|s| s.options.get(option_index as usize))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records_from_fixture() -> Vec<SymptomRecord> {
        let doc: FileDoc = toml::from_str(FIXTURE).unwrap();
        doc.symptom
    }

    fn to_text(records: Vec<SymptomRecord>) -> String {
        toml::to_string(&FileDoc { symptom: records }).unwrap()
    }

    #[test]
    fn fixture_has_ninety_options() {
        let q = Questionnaire::fixture();
        assert_eq!(q.symptoms().len(), 21);
        let all = all_response_options(&q);
        assert_eq!(all.len(), TOTAL_OPTIONS);
        assert_eq!((all[0].symptom_index, all[0].option_index), (1, 0));
        assert_eq!(q.symptom(16).unwrap().options.len(), 7);
        assert_eq!(q.symptom(18).unwrap().options.len(), 7);
        let four = q.symptoms().iter().filter(|s| s.options.len() == 4).count();
        assert_eq!(four, 19);
    }

    #[test]
    fn options_are_in_symptom_then_option_order() {
        let q = Questionnaire::fixture();
        let keys: Vec<_> = all_response_options(&q)
            .iter()
            .map(|o| (o.symptom_index, o.option_index))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn twenty_symptoms_rejected() {
        let mut recs = records_from_fixture();
        recs.pop();
        let err = Questionnaire::parse(&to_text(recs)).unwrap_err();
        assert!(err.to_string().contains("expected 21 symptoms"), "{err}");
    }

    #[test]
    fn wrong_option_count_names_symptom() {
        let mut recs = records_from_fixture();
        let five = recs.iter_mut().find(|r| r.index == 5).unwrap();
        while five.options.len() < 7 {
            five.options.push("extra".into());
        }
        match Questionnaire::parse(&to_text(recs)).unwrap_err() {
            QuestionnaireError::OptionCount {
                symptom, found, ..
            } => {
                assert_eq!(symptom, 5);
                assert_eq!(found, 7);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_and_out_of_range_indices() {
        let mut recs = records_from_fixture();
        recs[1].index = 1;
        assert!(matches!(
            Questionnaire::parse(&to_text(recs)),
            Err(QuestionnaireError::DuplicateIndex(1))
        ));
        let mut recs = records_from_fixture();
        recs[0].index = 22;
        assert!(matches!(
            Questionnaire::parse(&to_text(recs)),
            Err(QuestionnaireError::IndexOutOfRange(22))
        ));
    }

    #[test]
    fn unknown_keys_and_garbage_are_malformed() {
        let text = FIXTURE.replacen("name = \"Sadness\"", "name = \"Sadness\"\nscore = 3", 1);
        assert!(matches!(
            Questionnaire::parse(&text),
            Err(QuestionnaireError::Malformed(_))
        ));
        assert!(matches!(
            Questionnaire::parse("not [valid"),
            Err(QuestionnaireError::Malformed(_))
        ));
    }

    #[test]
    fn empty_option_rejected() {
        let mut recs = records_from_fixture();
        recs[2].options[1] = "   ".into();
        assert!(matches!(
            Questionnaire::parse(&to_text(recs)),
            Err(QuestionnaireError::EmptyOption {
                symptom: 3,
                option: 1
            })
        ));
    }

    #[test]
    fn shuffled_records_load_in_index_order() {
        let mut recs = records_from_fixture();
        recs.reverse();
        let q = Questionnaire::parse(&to_text(recs)).unwrap();
        assert_eq!(q, Questionnaire::fixture());
    }

    #[test]
    fn serialize_round_trip() {
        let q = Questionnaire::fixture();
        let again = Questionnaire::parse(&q.to_toml()).unwrap();
        assert_eq!(q, again);
    }
}
