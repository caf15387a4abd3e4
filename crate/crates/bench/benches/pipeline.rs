use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use warpco::bapu::{partition_defect, probe_points, Bapu};
use warpco::catalog::map_from_id;
use warpco::covering::{induced_covering, IndexWindow};
use warpco::embeddings::besov_truth_table;
use warpco::fftnd::Complex64;
use warpco::transform::{FrequencyGrid, Prototype, SampledSignal, VoiceTransform};

fn bench_covering(c: &mut Criterion) {
    let mut group = c.benchmark_group("covering");
    for id in ["identity", "ln", "alpha:0.5"] {
        let map = map_from_id(id, 2).unwrap();
        let cov = induced_covering(&map, 0.5, 1.0).unwrap();
        let window = IndexWindow::ball(2, 6.0);
        group.bench_with_input(BenchmarkId::new("first_neighbors", id), &window, |b, w| {
            b.iter(|| w.indices.iter().map(|k| cov.first_neighbors(k).len()).sum::<usize>())
        });
    }
    group.finish();
}

fn bench_bapu(c: &mut Criterion) {
    let mut group = c.benchmark_group("bapu");
    for d in [1usize, 2] {
        let map = map_from_id("ln", d).unwrap();
        let cov = induced_covering(&map, 0.5, 1.0).unwrap();
        let bapu = Bapu::new(&cov, 0.2).unwrap();
        let probes = probe_points(d, 5.0, 200, 1);
        group.bench_with_input(BenchmarkId::new("partition_defect", d), &probes, |b, p| {
            b.iter(|| partition_defect(&bapu, black_box(p)).unwrap().max_defect)
        });
    }
    group.finish();
}

fn bench_transform(c: &mut Criterion) {
    let mut group = c.benchmark_group("transform");
    group.sample_size(20);
    for id in ["identity", "ln"] {
        let map = map_from_id(id, 1).unwrap();
        let grid = FrequencyGrid::new(1, 2048, 32.0).unwrap();
        let f = SampledSignal::gaussian(grid, &[0.3], 0.1, &[0.0], Complex64::new(1.0, 0.0));
        let vt = VoiceTransform::new(&map, &Prototype::bump(1, 1.0).unwrap(), 0.125, grid).unwrap();
        let window = vt.window_for(&f, 0.0).unwrap();
        let coeffs = vt.analyze(&f, &window).unwrap();
        group.bench_function(BenchmarkId::new("analyze", id), |b| b.iter(|| vt.analyze(black_box(&f), &window).unwrap()));
        group.bench_function(BenchmarkId::new("synthesize", id), |b| b.iter(|| vt.synthesize(black_box(&coeffs)).unwrap()));
    }
    group.finish();
}

fn bench_truth_table(c: &mut Criterion) {
    c.bench_function("besov_truth_table", |b| b.iter(|| besov_truth_table(black_box(1.0)).unwrap()));
}

criterion_group!(benches, bench_covering, bench_bapu, bench_transform, bench_truth_table);
criterion_main!(benches);
