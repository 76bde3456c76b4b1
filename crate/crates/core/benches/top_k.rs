use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symsearch::questionnaire::Questionnaire;
use symsearch::retrieval::{build_run, OriginFilter, RunConfig};
use symsearch::synthgen::{generated_query_id, original_queries, Origin, QueryText};
use symsearch::vector_store::EmbeddingStore;
use symsearch::Execution;

fn random_store(rng: &mut ChaCha8Rng, n: usize, dim: usize, prefix: &str) -> EmbeddingStore {
    let mut store = EmbeddingStore::new(dim).unwrap();
    for i in 0..n {
        let v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        store.insert(format!("{prefix}{i:07}"), &v).unwrap();
    }
    store
}

fn executions() -> Vec<(&'static str, Execution)> {
    let mut e = vec![("sequential", Execution::Sequential)];
    if Execution::Parallel.is_parallel() {
        e.push(("parallel", Execution::Parallel));
    }
    e
}

fn top_k(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("top_k");
    for &(n, dim) in &[(20_000usize, 384usize), (100_000, 768)] {
        let store = random_store(&mut rng, n, dim, "s");
        let query = store.row(0).to_vec();
        group.throughput(Throughput::Elements(n as u64));
        for (name, exec) in executions() {
            group.bench_with_input(BenchmarkId::new(name, format!("{n}x{dim}")), &exec, |b, &exec| {
                b.iter(|| store.top_k(black_box(&query), 50, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn full_run(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let q = Questionnaire::fixture();
    let dim = 384;
    let corpus = random_store(&mut rng, 20_000, dim, "s");
    let mut queries = original_queries(&q);
    for o in original_queries(&q) {
        for j in 1..=5 {
            queries.push(QueryText {
                query_id: generated_query_id(o.symptom_index, o.option_index, j),
                origin: Origin::Generated,
                ..o.clone()
            });
        }
    }
    let mut qstore = EmbeddingStore::new(dim).unwrap();
    for t in &queries {
        let v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        qstore.insert(t.query_id.clone(), &v).unwrap();
    }
    let cfg = RunConfig::new("Bench", OriginFilter::All, "random");
    let mut group = c.benchmark_group("build_run");
    group.sample_size(10);
    for (name, exec) in executions() {
        group.bench_function(name, |b| {
            b.iter(|| build_run(&q, &queries, &corpus, &qstore, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, top_k, full_run);
criterion_main!(benches);
