use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use multicp::{build_gram, dilate, norm_estimate, DilateOptions, NormOptions};
use multicp_bench::{arguments, workloads};
use std::hint::black_box;

fn evaluate(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate");
    for w in workloads() {
        let entry = &w.map.entries()[0];
        let args = arguments(&w.map, 1);
        group.bench_function(BenchmarkId::from_parameter(&w.label), |b| {
            b.iter(|| entry.evaluate(black_box(&args)).unwrap())
        });
    }
    group.finish();
}

fn gram(c: &mut Criterion) {
    let mut group = c.benchmark_group("gram");
    for w in workloads() {
        group.bench_function(BenchmarkId::from_parameter(&w.label), |b| {
            b.iter(|| build_gram(black_box(&w.map)).unwrap())
        });
    }
    group.finish();
}

fn dilation(c: &mut Criterion) {
    let mut group = c.benchmark_group("dilate");
    group.sample_size(20);
    let opts = DilateOptions::default();
    for w in workloads() {
        group.bench_function(BenchmarkId::from_parameter(&w.label), |b| {
            b.iter(|| dilate(black_box(&w.map), &opts).unwrap())
        });
    }
    group.finish();
}

fn norms(c: &mut Criterion) {
    let mut group = c.benchmark_group("norm_estimate");
    group.sample_size(10);
    let opts = NormOptions { restarts: 4, iters: 20, ..Default::default() };
    for w in workloads().into_iter().filter(|w| w.map.k() >= 2) {
        for t in [1, 2] {
            group.bench_function(BenchmarkId::new(&w.label, format!("t{t}")), |b| {
                b.iter(|| norm_estimate(black_box(&w.map), t, &opts).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, evaluate, gram, dilation, norms);
criterion_main!(benches);
