//! Retrieval manifest: which stores to load and which runs to build.
//!
//! ```toml
//! questionnaire = "questionnaire.toml"   # optional, bundled copy otherwise
//! queries = "queries.tsv"                # generated queries
//! out_dir = "runs"
//!
//! [encoders.mpnet]
//! corpus = "corpus.mpnet.emb"
//! queries = "queries.mpnet.emb"
//!
//! [[run]]
//! tag = "SemSearchOnBDI2Queries"
//! origin = "original"
//! encoder = "mpnet"
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::retrieval::{OriginFilter, RunConfig, DEFAULT_CAP, DEFAULT_PER_QUERY_K};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub questionnaire: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub encoders: BTreeMap<String, EncoderPaths>,
    #[serde(default, rename = "run")]
    pub runs: Vec<RunSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderPaths {
    pub corpus: PathBuf,
    pub queries: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub tag: String,
    pub origin: String,
    pub encoder: String,
    pub per_query_k: Option<usize>,
    pub cap: Option<usize>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut m: Manifest = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        m.questionnaire.as_mut().map(resolve);
        m.queries.as_mut().map(resolve);
        m.out_dir.as_mut().map(resolve);
        for e in m.encoders.values_mut() {
            resolve(&mut e.corpus);
            resolve(&mut e.queries);
        }
        Ok(m)
    }

    /// Turns the run specs into validated configs, applying the k and cap
    /// overrides given on the command line.
    pub fn run_configs(
        &self,
        per_query_k: Option<usize>,
        cap: Option<usize>,
    ) -> Result<Vec<RunConfig>, String> {
        if self.runs.is_empty() {
            return Err("no runs configured".into());
        }
        let mut tags = HashSet::new();
        let mut out = Vec::with_capacity(self.runs.len());
        for spec in &self.runs {
            if !tags.insert(spec.tag.as_str()) {
                return Err(format!("run tag {} is configured twice", spec.tag));
            }
            if !self.encoders.contains_key(&spec.encoder) {
                return Err(format!("run {} uses unknown encoder {:?}", spec.tag, spec.encoder));
            }
            let origin: OriginFilter = spec.origin.parse()?;
            let cfg = RunConfig {
                per_query_k: per_query_k.or(spec.per_query_k).unwrap_or(DEFAULT_PER_QUERY_K),
                cap: cap.or(spec.cap).unwrap_or(DEFAULT_CAP),
                ..RunConfig::new(&spec.tag, origin, &spec.encoder)
            };
            cfg.validate().map_err(|e| format!("run {}: {e}", spec.tag))?;
            out.push(cfg);
        }
        Ok(out)
    }
}
