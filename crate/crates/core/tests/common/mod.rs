//! Synthetic end-to-end fixture: 200 English sentences across 10 users, with
//! hand-built embeddings for two encoders. For symptoms 1..=18, ten sentences
//! each are planted within 14° of every query vector of that symptom; the last
//! 20 sentences are noise. Symptoms 19..=21 have nothing planted.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symsearch::corpus::read_canonical;
use symsearch::retrieval::RunConfig;
use symsearch::synthgen::read_queries;
use symsearch::vector_store::{write_binary, EmbeddingStore};

pub const DIM: usize = 32;
pub const USERS: usize = 10;
pub const PER_USER: usize = 20;
pub const PLANTED_SYMPTOMS: u8 = 18;
pub const PLANTED_PER_SYMPTOM: usize = 10;
pub const ENCODERS: [&str; 2] = ["semantic", "mental"];

pub fn symsearch(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symsearch"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("OPENAI_API_KEY")
        .env_remove("OPENAI_BASE_URL")
        .output()
        .expect("spawn symsearch")
}

pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = symsearch(dir, args);
    assert!(
        out.status.success(),
        "symsearch {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn doc_id(global: usize) -> String {
    format!("u{:02}-s{:03}", global / PER_USER, global % PER_USER)
}

/// Symptom a sentence is planted for, if any.
pub fn planted_symptom(global: usize) -> Option<u8> {
    let n = PLANTED_SYMPTOMS as usize * PLANTED_PER_SYMPTOM;
    (global < n).then(|| (global % PLANTED_SYMPTOMS as usize) as u8 + 1)
}

pub fn planted() -> BTreeMap<u8, Vec<String>> {
    let mut m: BTreeMap<u8, Vec<String>> = BTreeMap::new();
    for g in 0..USERS * PER_USER {
        if let Some(s) = planted_symptom(g) {
            m.entry(s).or_default().push(doc_id(g));
        }
    }
    m
}

const SUBJECTS: &[&str] = &["my sister", "the new job", "our old car", "the weekend", "my exam", "the trip"];
const VERBS: &[&str] = &["has been on my mind", "was a lot harder than I thought", "made me laugh", "is something I keep thinking about"];

fn sentence(rng: &mut ChaCha8Rng) -> String {
    format!(
        "I think that {} {} and I am not sure what to do about it.",
        SUBJECTS[rng.gen_range(0..SUBJECTS.len())],
        VERBS[rng.gen_range(0..VERBS.len())]
    )
}

/// Per-user TREC files, plus two sentences ingest must drop.
pub fn write_corpus(dir: &Path) -> PathBuf {
    let corpus = dir.join("corpus");
    fs::create_dir_all(&corpus).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for u in 0..USERS {
        let mut text = String::new();
        for i in 0..PER_USER {
            let g = u * PER_USER + i;
            text += &format!(
                "<DOC>\n<DOCNO>{}</DOCNO>\n<TEXT>{} https://example.com/{g}</TEXT>\n</DOC>\n",
                doc_id(g),
                sentence(&mut rng)
            );
        }
        if u == 0 {
            text += "<DOC><DOCNO>u00-x1</DOCNO><TEXT>Je ne sais pas ce que je vais faire de ma vie.</TEXT></DOC>\n";
            text += "<DOC><DOCNO>u00-x2</DOCNO><TEXT>www.example.org</TEXT></DOC>\n";
        }
        fs::write(corpus.join(format!("u{u:02}.trec")), text).unwrap();
    }
    corpus
}

fn unit(v: Vec<f32>) -> Vec<f32> {
    let n = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    v.into_iter().map(|x| (x as f64 / n) as f32).collect()
}

/// Random unit direction in the dimensions no symptom axis uses.
fn spare_direction(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v = vec![0.0; DIM];
    for x in v.iter_mut().skip(21) {
        *x = rng.gen_range(-1.0..1.0);
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Symptom axis, rotated `degrees` towards a random spare direction.
fn near_axis(rng: &mut ChaCha8Rng, axis: usize, degrees: f64) -> Vec<f32> {
    let u = spare_direction(rng);
    let t = degrees.to_radians();
    let v: Vec<f32> = (0..DIM)
        .map(|d| (if d == axis { t.cos() } else { 0.0 } + t.sin() * u[d]) as f32)
        .collect();
    unit(v)
}

fn axis(encoder: usize, symptom: u8) -> usize {
    // The second encoder permutes the symptom axes.
    (symptom as usize - 1) * (1 + 4 * encoder) % 21
}

/// Writes `<encoder>.corpus.emb` and `<encoder>.queries.emb` for every
/// encoder, covering the kept sentences and all query ids.
pub fn write_embeddings(dir: &Path, corpus_tsv: &Path, queries_tsv: &Path) {
    let records = read_canonical(std::io::BufReader::new(fs::File::open(corpus_tsv).unwrap())).unwrap();
    let mut queries = symsearch::synthgen::original_queries(&symsearch::questionnaire::Questionnaire::fixture());
    queries.extend(read_queries(std::io::BufReader::new(fs::File::open(queries_tsv).unwrap()), None).unwrap());
    let by_id: BTreeMap<String, usize> = (0..USERS * PER_USER).map(|g| (doc_id(g), g)).collect();
    for (e, name) in ENCODERS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + e as u64);
        let mut corpus = EmbeddingStore::new(DIM).unwrap();
        for r in records.iter().filter(|r| r.kept) {
            let g = by_id[&r.doc_id];
            let v = match planted_symptom(g) {
                Some(s) => {
                    let deg = rng.gen_range(2.0..12.0);
                    near_axis(&mut rng, axis(e, s), deg)
                }
                None => {
                    let mut v: Vec<f32> = spare_direction(&mut rng).into_iter().map(|x| x as f32).collect();
                    for x in v.iter_mut().take(21) {
                        *x = rng.gen_range(-0.15..0.15);
                    }
                    unit(v)
                }
            };
            corpus.insert(r.doc_id.clone(), &v).unwrap();
        }
        let mut qs = EmbeddingStore::new(DIM).unwrap();
        for q in &queries {
            let deg = rng.gen_range(0.0..1.5);
            let v = near_axis(&mut rng, axis(e, q.symptom_index), deg);
            qs.insert(q.query_id.clone(), &v).unwrap();
        }
        for (store, kind) in [(&corpus, "corpus"), (&qs, "queries")] {
            let f = fs::File::create(dir.join(format!("{name}.{kind}.emb"))).unwrap();
            write_binary(store, std::io::BufWriter::new(f)).unwrap();
        }
    }
}

/// Extended qrels: planted sentences judged (1,1,1) or, for the last two per
/// symptom, (1,1,0); a few noise sentences judged non-relevant; symptom 19
/// judged with a single positive label only.
pub fn write_qrels(path: &Path) {
    let mut text = String::new();
    for (s, docs) in planted() {
        for (i, d) in docs.iter().enumerate() {
            let labels = if i < PLANTED_PER_SYMPTOM - 2 { "1 1 1" } else { "1 1 0" };
            text += &format!("{s} {d} {labels}\n");
        }
        text += &format!("{s} {} 0 0 0\n", doc_id(195));
    }
    text += &format!("19 {} 1 0 0\n", doc_id(190));
    fs::write(path, text).unwrap();
}

pub fn write_manifest(dir: &Path) -> PathBuf {
    let mut text = String::from("queries = \"queries.tsv\"\nout_dir = \"runs\"\n");
    for name in ENCODERS {
        text += &format!("\n[encoders.{name}]\ncorpus = \"{name}.corpus.emb\"\nqueries = \"{name}.queries.emb\"\n");
    }
    for r in RunConfig::standard_runs(ENCODERS[0], ENCODERS[1]) {
        text += &format!(
            "\n[[run]]\ntag = \"{}\"\norigin = \"{}\"\nencoder = \"{}\"\n",
            r.run_tag, r.origin_filter, r.encoder_label
        );
    }
    let path = dir.join("runs.toml");
    fs::write(&path, text).unwrap();
    path
}

pub struct PipelineOutput {
    pub ingest_stats: String,
    pub run_files: Vec<PathBuf>,
    pub reports: Vec<PathBuf>,
    pub pool: PathBuf,
}

/// ingest → mock generate → embeddings → retrieve five runs → evaluate each
/// under both aggregation modes → pool. `extra` goes before every subcommand.
pub fn run_pipeline(dir: &Path, extra: &[&str]) -> PipelineOutput {
    let with = |args: &[&str]| -> Vec<String> { extra.iter().chain(args).map(|s| s.to_string()).collect() };
    let call = |args: &[&str]| {
        let owned = with(args);
        let refs: Vec<&str> = owned.iter().map(String::as_str).collect();
        ok(dir, &refs)
    };
    write_corpus(dir);
    let ingest_stats = call(&["ingest", "--corpus-dir", "corpus", "--out", "corpus.tsv"]);
    call(&["generate", "--mock", "--seed", "7", "--n", "3", "--out", "queries.tsv"]);
    write_embeddings(dir, &dir.join("corpus.tsv"), &dir.join("queries.tsv"));
    write_qrels(&dir.join("qrels.txt"));
    write_manifest(dir);
    call(&["retrieve", "--config", "runs.toml"]);
    let mut run_files = Vec::new();
    let mut reports = Vec::new();
    for r in RunConfig::standard_runs(ENCODERS[0], ENCODERS[1]) {
        let run = format!("runs/{}.txt", r.run_tag);
        for mode in ["majority", "unanimity"] {
            let report = format!("reports/{}.{mode}.txt", r.run_tag);
            call(&["evaluate", "--run", &run, "--qrels", "qrels.txt", "--mode", mode, "--out", &report]);
            reports.push(dir.join(report));
        }
        run_files.push(dir.join(run));
    }
    let all_runs: Vec<String> = run_files.iter().map(|p| p.display().to_string()).collect();
    call(&["pool", "--k", "50", "--runs", &all_runs.join(","), "--out", "pool.txt"]);
    PipelineOutput {
        ingest_stats,
        run_files,
        reports,
        pool: dir.join("pool.txt"),
    }
}

/// Reads `metric \t symptom|mean \t value` lines from a report.
pub fn report_value(report: &str, metric: &str, key: &str) -> Option<f64> {
    report.lines().find_map(|l| {
        let mut f = l.split('\t');
        (f.next() == Some(metric) && f.next() == Some(key)).then(|| f.next()?.parse().ok())?
    })
}
