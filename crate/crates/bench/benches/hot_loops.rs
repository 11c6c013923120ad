use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shlab_bench::{even_densities, queue_streams};
use shlab_core::horizon::{sample_sh, Grid, ShOptions};
use shlab_core::queue::{fm_construct, fm_sample_stationary, sample_inputs, serve};
use shlab_core::tasep::{ClockStream, Direction, Geometry, TasepState};
use shlab_core::Window;

fn queue(c: &mut Criterion) {
    let mut g = c.benchmark_group("serve");
    for len in [10_000i64, 100_000] {
        let (a, s) = queue_streams(len, 0.5, 0.05);
        g.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, _| {
            b.iter(|| serve(black_box(&a), black_box(&s), 3).unwrap())
        });
    }
    g.finish();
}

fn multiline(c: &mut Criterion) {
    let mut g = c.benchmark_group("fm");
    for k in [2usize, 4, 8] {
        let d = even_densities(k, 0.6);
        let w = Window::int(0, 9_999).unwrap();
        let xs = sample_inputs(&d, w, 5).unwrap();
        g.bench_with_input(BenchmarkId::new("construct", k), &k, |b, _| {
            b.iter(|| fm_construct(black_box(&xs)).unwrap())
        });
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        g.bench_with_input(BenchmarkId::new("stationary", k), &k, |b, _| {
            b.iter(|| fm_sample_stationary(&d, w, &mut rng).unwrap())
        });
    }
    g.finish();
}

fn tasep(c: &mut Criterion) {
    let len = 2000;
    let start = TasepState::fully_labeled(len, Geometry::Ring, Direction::Right).unwrap();
    c.bench_function("tasep/ring_2000_t50", |b| {
        b.iter(|| {
            let mut s = start.clone();
            s.run(&mut ClockStream::new(9, len), 50.0).unwrap();
            s
        })
    });
}

fn horizon(c: &mut Criterion) {
    let grid = Grid::symmetric(2.0, 1.0 / 64.0).unwrap();
    let mut seed = 0u64;
    c.bench_function("horizon/sample_sh_3", |b| {
        b.iter(|| {
            seed += 1;
            sample_sh(&[-1.0, 0.0, 1.0], grid, ShOptions::default(), seed).unwrap()
        })
    });
}

criterion_group!(benches, queue, multiline, tasep, horizon);
criterion_main!(benches);
