use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use phasecov::galilei::weyl_mode;
use phasecov::povm::{measure_region, prob_density};
use phasecov::rotinv::angular_blocks;
use phasecov::{build_space, PhasePoint};
use phasecov_bench::{centred_ball, line, solid, solid_box};
use std::hint::black_box;

fn weyl(c: &mut Criterion) {
    let mut group = c.benchmark_group("weyl_mode");
    for n_cut in [8, 16, 32] {
        group.bench_with_input(BenchmarkId::from_parameter(n_cut), &n_cut, |b, &n| {
            b.iter(|| weyl_mode(black_box(n), black_box(0.7), black_box(-0.4)))
        });
    }
    group.finish();
}

fn density(c: &mut Criterion) {
    let f = line(20, 60);
    let x = PhasePoint::new(&[0.8], &[-1.1]).unwrap();
    c.bench_function("prob_density/d1_n20", |b| {
        b.iter(|| prob_density(&f.space, &f.t, &f.t, black_box(&x)).unwrap())
    });
}

fn measure(c: &mut Criterion) {
    let mut group = c.benchmark_group("measure_region");
    group.sample_size(10);
    let f = line(16, 60);
    let ball = centred_ball(1, 1.0);
    group.bench_function("d1_ball_n16", |b| {
        b.iter(|| measure_region(&f.space, &f.t, &ball, &f.rule).unwrap())
    });
    let f = solid(4, 40);
    let region = solid_box();
    group.bench_function("d3_box_n4", |b| {
        b.iter(|| measure_region(&f.space, &f.t, &region, &f.rule).unwrap())
    });
    group.finish();
}

fn blocks(c: &mut Criterion) {
    let mut group = c.benchmark_group("angular_blocks");
    for n_cut in [4, 6] {
        let space = build_space(3, n_cut, 1.0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n_cut), &space, |b, s| {
            b.iter(|| angular_blocks(s).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, weyl, density, measure, blocks);
criterion_main!(benches);
