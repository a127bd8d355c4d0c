use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use q2d2::analytics::uniform_latents;
use q2d2::{NearestSearch, QuantizerConfig, TilingKind};

fn batch(c: &mut Criterion) {
    let latents = uniform_latents(7, 20_000, 6);
    let mut group = c.benchmark_group("quantize_batch");
    group.throughput(Throughput::Elements(latents.len() as u64));
    for kind in TilingKind::ALL {
        let q = QuantizerConfig::uniform(kind, vec![7; 6]).unwrap();
        group.bench_with_input(BenchmarkId::new("sequential", kind), &q, |b, q| {
            b.iter(|| q.quantize_batch_sequential(black_box(&latents)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("batch", kind), &q, |b, q| {
            b.iter(|| q.quantize_batch(black_box(&latents)).unwrap())
        });
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let latents = uniform_latents(8, 2_000, 6);
    let mut group = c.benchmark_group("nearest_search");
    group.throughput(Throughput::Elements(latents.len() as u64));
    for levels in [7usize, 31] {
        for search in [NearestSearch::Fast, NearestSearch::BruteForce] {
            let q = QuantizerConfig::uniform(TilingKind::Rhombic, vec![levels; 6]).unwrap().with_search(search);
            group.bench_with_input(BenchmarkId::new(format!("{search:?}"), levels), &q, |b, q| {
                b.iter(|| q.quantize_batch_sequential(black_box(&latents)).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, batch, search);
criterion_main!(benches);
