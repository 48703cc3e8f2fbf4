//! Benchmarks for the paths the sweeps and the discovery pipeline lean on:
//! choke-set search, hyperdeterminant expansion, the kernel independence
//! statistic, and a full per-graph faithfulness profile.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use latentcycle::catalog;
use latentcycle::faithfulness;
use latentcycle::graph::{min_tsep_size, random_dag};
use latentcycle::sem::{CoefficientRegime, LinearSem, NoiseSpec};
use latentcycle::stats::hsic_independence_test;
use latentcycle::tensor::hyperdeterminant;

fn bench_min_tsep(c: &mut Criterion) {
    let g = catalog::double_block_cycle();
    let xs: Vec<usize> = (0..4)
        .map(|i| g.vertex_by_label(&format!("X{}", i + 3)).unwrap())
        .collect();
    let ys: Vec<usize> = (0..4)
        .map(|i| g.vertex_by_label(&format!("X{}", i + 7)).unwrap())
        .collect();
    c.bench_function("min_tsep_size 32-vertex blocks", |b| {
        b.iter(|| {
            latentcycle::graph::min_tsep_size_with_cap(&g, &xs, &ys, 4, usize::MAX).unwrap()
        })
    });
    let small = random_dag(10, 3.0, 7).unwrap();
    c.bench_function("min_tsep_size 10-vertex random", |b| {
        b.iter(|| min_tsep_size(&small, &[0, 1], &[8, 9], 4).unwrap())
    });
}

fn bench_hyperdeterminant(c: &mut Criterion) {
    let g = random_dag(5, 3.0, 3).unwrap();
    let sem = LinearSem::random(
        g,
        CoefficientRegime::SplitUnit,
        NoiseSpec::ShiftedExponential { rate: 1.0 },
        4,
    )
    .unwrap();
    let c4 = sem.implied_cumulant_tensor(4).unwrap();
    c.bench_function("hyperdeterminant order 4 dim 5", |b| {
        b.iter(|| hyperdeterminant(black_box(&c4)).unwrap())
    });
}

fn bench_hsic(c: &mut Criterion) {
    let g = random_dag(2, 1.0, 5).unwrap();
    let sem = LinearSem::random(
        g,
        CoefficientRegime::SplitUnit,
        NoiseSpec::Uniform { lo: -2.0, hi: 2.0 },
        6,
    )
    .unwrap();
    let data = sem.sample(512, 7).unwrap();
    c.bench_function("hsic permutation test n=512", |b| {
        b.iter(|| hsic_independence_test(&data, &[0], &[1], 0.05, 50, 9).unwrap())
    });
}

fn bench_faithfulness_profile(c: &mut Criterion) {
    let g = random_dag(10, 5.0, 11).unwrap();
    let sem = LinearSem::random(
        g,
        CoefficientRegime::Uniform1,
        NoiseSpec::unit_gaussian(),
        12,
    )
    .unwrap();
    c.bench_function("faithfulness profile p=10 dense", |b| {
        b.iter(|| faithfulness::profile(black_box(&sem)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_min_tsep,
    bench_hyperdeterminant,
    bench_hsic,
    bench_faithfulness_profile
);
criterion_main!(benches);
