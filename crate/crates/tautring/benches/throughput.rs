use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tautring::gorenstein::pairing_matrix;

/// The pairing matrix fills row by row, and rows are where the data
/// parallelism lives; this compares the rayon path against the sequential
/// fallback on the same inputs.
fn bench_pairing_rows(c: &mut Criterion) {
    let mut group = c.benchmark_group("pairing-matrix rows");
    group.sample_size(10);
    for (g, n, k) in [(0u32, 5u32, 1usize), (0, 6, 1), (1, 3, 1)] {
        for (label, parallel) in [("parallel", true), ("sequential", false)] {
            group.bench_with_input(
                BenchmarkId::new(label, format!("g{g}n{n}k{k}")),
                &parallel,
                |b, &parallel| {
                    b.iter(|| {
                        pairing_matrix(black_box(g), black_box(n), black_box(k), parallel)
                            .unwrap()
                    })
                },
            );
        }
    }
    group.finish();
}

fn bench_enumeration(c: &mut Criterion) {
    c.bench_function("enumerate graphs (1,3) up to 3 edges", |b| {
        b.iter(|| {
            tautring::graph::enumerate_stable_graphs_with_budget(1, 3, 3, 200_000).unwrap()
        })
    });
}

criterion_group!(benches, bench_pairing_rows, bench_enumeration);
criterion_main!(benches);
