//! Sequential (one worker) vs default rayon pool for the data-parallel hot
//! spots. Build with `--no-default-features` to bench the pure fallback.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gdabench::embed::{rank_candidates, train, Direction, EmbeddingModel, ModelConfig, ModelKind, TrainingData};
use gdabench::kg::{EntityId, EntityKind, KnowledgeGraph, RelationId, Triple, Vocabulary};
use gdabench::pairclf::{fit_matrix, ClassifierKind, ClassifierSpec};
use gdabench::par;
use gdabench::walker::{generate_walks, WalkConfig};

fn modes() -> [(&'static str, usize); 2] {
    [("sequential", 1), ("parallel", par::threads().max(2))]
}

fn random_kg(n: usize, edges: usize) -> (KnowledgeGraph, Vec<EntityId>) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut v = Vocabulary::new();
    let ids: Vec<EntityId> = (0..n).map(|i| v.entity(&format!("C_{i}"), EntityKind::OntologyClass).unwrap()).collect();
    let rels: Vec<RelationId> = (0..4).map(|i| v.relation(&format!("r{i}"))).collect();
    let triples: Vec<Triple> = (0..edges)
        .map(|_| Triple::new(ids[rng.random_range(0..n)], rels[rng.random_range(0..4)], ids[rng.random_range(0..n)]))
        .collect();
    (KnowledgeGraph::from_triples(Arc::new(v), "bench", triples).unwrap(), ids)
}

fn ranking(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let model = EmbeddingModel::init(ModelKind::ComplEx, 200, 20_000, 2, &mut rng);
    let pool: Vec<EntityId> = (1..20_000).map(EntityId).collect();
    let mut g = c.benchmark_group("rank_candidates");
    for (name, n) in modes() {
        g.bench_function(BenchmarkId::new(name, n), |b| {
            b.iter(|| par::with_threads(n, || rank_candidates(&model, EntityId(0), RelationId(1), Direction::PredictTail, black_box(&pool)).unwrap()))
        });
    }
    g.finish();
}

fn lp_training(c: &mut Criterion) {
    let (kg, _) = random_kg(2_000, 20_000);
    let data = TrainingData::from_kg(&kg);
    let cfg = ModelConfig {
        dim: 64,
        epochs: 1,
        nr_batches: 10,
        ..ModelConfig::defaults(ModelKind::TransH)
    };
    let mut g = c.benchmark_group("train_epoch");
    g.sample_size(10);
    for (name, n) in modes() {
        g.bench_function(BenchmarkId::new(name, n), |b| b.iter(|| par::with_threads(n, || train(black_box(&data), &cfg).unwrap())));
    }
    g.finish();
}

fn walks(c: &mut Criterion) {
    let (kg, ids) = random_kg(5_000, 25_000);
    let cfg = WalkConfig {
        walks_per_entity: 50,
        ..WalkConfig::default()
    };
    let mut g = c.benchmark_group("generate_walks");
    g.sample_size(10);
    for (name, n) in modes() {
        g.bench_function(BenchmarkId::new(name, n), |b| b.iter(|| par::with_threads(n, || generate_walks(&kg, black_box(&ids), &cfg).unwrap())));
    }
    g.finish();
}

fn forest(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<Vec<f64>> = (0..2_000).map(|_| (0..32).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y: Vec<bool> = x.iter().map(|r| r[0] + r[1] * r[2] > 0.0).collect();
    let spec = ClassifierSpec {
        n_estimators: 32,
        ..ClassifierSpec::new(ClassifierKind::RandomForest)
    };
    let mut g = c.benchmark_group("random_forest_fit");
    g.sample_size(10);
    for (name, n) in modes() {
        g.bench_function(BenchmarkId::new(name, n), |b| b.iter(|| par::with_threads(n, || fit_matrix(&spec, black_box(&x), &y).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, ranking, lp_training, walks, forest);
criterion_main!(benches);
