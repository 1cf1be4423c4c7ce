use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use galerkin_rk::spectral::TransformScratch;
use galerkin_rk::{compensator_field, integrate, sample_lattice, step, SchemeKind, SpectralField};
use galerkin_rk_bench::heat_sine_path;
use std::hint::black_box;

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("dst");
    for n in [16usize, 64, 256, 1024] {
        let t = galerkin_rk::spectral::SineTransform::new(n).unwrap();
        let input: Vec<f64> = (0..n).map(|k| ((k * 7919) % 13) as f64 - 6.0).collect();
        let mut out = vec![0.0; n];
        let mut scratch = TransformScratch::default();
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| t.apply(black_box(&input), &mut out, 1.0, &mut scratch))
        });
    }
    group.finish();
}

fn single_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for scheme in SchemeKind::ALL {
        for n in [32usize, 128] {
            let fx = heat_sine_path(scheme, n);
            let state = SpectralField::zeros(n);
            let dw =
                galerkin_rk::increment_field(&fx.spec.noise, &fx.lattice, 0, &fx.basis).unwrap();
            let comp = compensator_field(&fx.spec.noise, n, fx.cfg.h, &fx.basis).unwrap();
            group.bench_with_input(BenchmarkId::new(scheme.name(), n), &n, |b, _| {
                b.iter(|| {
                    step(&fx.spec, &fx.cfg, black_box(&state), &dw, &comp, &fx.basis).unwrap()
                })
            });
        }
    }
    group.finish();
}

fn one_path(c: &mut Criterion) {
    let mut group = c.benchmark_group("path");
    group.sample_size(10);
    for scheme in SchemeKind::ALL {
        for n in [8usize, 16, 32] {
            let fx = heat_sine_path(scheme, n);
            group.throughput(Throughput::Elements(fx.cfg.rng_draws() as u64));
            group.bench_with_input(BenchmarkId::new(scheme.name(), n), &n, |b, _| {
                b.iter(|| integrate(&fx.spec, &fx.cfg, &fx.lattice, &fx.basis).unwrap())
            });
        }
    }
    group.finish();
}

fn lattice(c: &mut Criterion) {
    let mut group = c.benchmark_group("lattice");
    for n in [16usize, 64] {
        let m = n * n;
        group.throughput(Throughput::Elements((m * n) as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| sample_lattice(m, n, 1.0 / m as f64, 1, black_box(3)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, transforms, single_step, one_path, lattice);
criterion_main!(benches);
