//! Questionnaire-driven semantic search over social-media sentences.
//!
//! The pipeline ranks corpus sentences against the response options of a
//! 21-item depression questionnaire (optionally augmented with LLM-generated
//! queries), writes TREC run files, and scores them against pooled,
//! three-annotator relevance judgments.

pub mod cli;
pub mod corpus;
pub mod evaluation;
pub mod synthgen;
pub mod exec;
pub mod questionnaire;
pub mod retrieval;
mod tsv;
pub mod vector_store;

pub use exec::Execution;
